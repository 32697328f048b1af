"""Batch evaluation kernels.

Two implementations of the same computation: a numba ``@njit`` loop over the
batch and a vectorised numpy version. Both perform the floating-point
operations in the same order, so their results are bit-identical. The numba
path is used when numba imports and ``PWSS_NUMBA`` is not set to ``0``.

Per row of ``genes`` (offsets into each task's full pool) the kernels return
fitness, composite utility, QoS-constraint violations, interservice
violations, the transactional flag, the composite QoS vector and the derived
transactional-property code.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None

# The only-transactional row reaches 0.75 at U' = 1, the excluded upper edge of
# its band, and would tie with the worst feasible individual. Capping it one
# ulp below keeps the bands disjoint.
ONLY_T_CAP = float(np.nextafter(0.75, 0.0))


def _jit(fn):
    # fastmath stays off: the numpy path must reproduce these results bit for bit
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def default_backend() -> str:
    if not NUMBA_AVAILABLE or os.environ.get("PWSS_NUMBA", "1").strip().lower() in ("0", "false", "no", "off"):
        return "numpy"
    return "numba"


@_jit
def _band_fitness(u, cr, vr, c_bad, v_bad, t_bad):
    # closed forms of the four-band fitness table; keep in step with _band_fitness_np
    if not c_bad and not v_bad:
        if not t_bad:
            return (3.0 + u) / 4.0
        return min((2.0 + u) / 4.0, ONLY_T_CAP)
    if v_bad and not c_bad:
        if not t_bad:
            return (5.0 + u - vr) / 8.0
        return (3.0 + u - vr) / 8.0
    if c_bad and not v_bad:
        if not t_bad:
            return (5.0 + u - cr) / 8.0
        return (3.0 + u - cr) / 8.0
    if not t_bad:
        return (5.0 + u - cr - vr) / 12.0
    return (2.0 + u - cr - vr) / 12.0


def _evaluate_loop(genes, qos, tps, ops, args, depth, agg, negative, weights, cmin, cmax,
                   qc, dc, cc, tc_mask, tc_active, rules, loop_rules,
                   fit, util, cviol, vviol, tviol, qout, tpout):
    nb = genes.shape[0]
    k = qos.shape[2]
    stack = np.empty((depth, k))
    tstack = np.empty(depth, np.int64)
    c_max = 0
    for r in range(k):
        if not np.isnan(qc[r]):
            c_max += 1
    v_max = dc.shape[0] + cc.shape[0]
    for b in range(nb):
        top = 0
        for pc in range(ops.shape[0]):
            op = ops[pc]
            arg = args[pc]
            if op == 0:
                g = genes[b, arg]
                for r in range(k):
                    stack[top, r] = qos[arg, g, r]
                tstack[top] = tps[arg, g]
                top += 1
            elif op == 2:
                for r in range(k):
                    x = stack[top - 1, r]
                    kind = agg[1, r]
                    if kind == 0:
                        stack[top - 1, r] = float(arg) * x
                    elif kind == 1:
                        acc = x
                        for _ in range(arg - 1):
                            acc = acc * x
                        stack[top - 1, r] = acc
                tstack[top - 1] = loop_rules[tstack[top - 1]]
            else:
                if op == 1:
                    row = 0
                    ri = 0
                elif op == 3:
                    row = 2
                    ri = 1
                else:
                    row = 3
                    ri = 2
                base = top - arg
                for r in range(k):
                    kind = agg[row, r]
                    acc = stack[base, r]
                    for j in range(1, arg):
                        x = stack[base + j, r]
                        if kind == 0:
                            acc = acc + x
                        elif kind == 1:
                            acc = acc * x
                        elif kind == 2:
                            if x < acc:
                                acc = x
                        else:
                            if x > acc:
                                acc = x
                    stack[base, r] = acc
                tacc = tstack[base]
                for j in range(1, arg):
                    tacc = rules[ri, tacc, tstack[base + j]]
                tstack[base] = tacc
                top = base + 1

        u = 0.0
        n_c = 0
        for r in range(k):
            q = stack[0, r]
            qout[b, r] = q
            span = cmax[r] - cmin[r]
            if span > 0.0:
                if negative[r]:
                    term = (cmax[r] - q) / span
                else:
                    term = (q - cmin[r]) / span
            else:
                term = 1.0
            u = u + weights[r] * term
            if not np.isnan(qc[r]):
                if negative[r]:
                    if q > qc[r]:
                        n_c += 1
                elif q < qc[r]:
                    n_c += 1
        if u < 0.0:
            u = 0.0
        if u > 1.0:
            u = 1.0

        n_v = 0
        for d in range(dc.shape[0]):
            if genes[b, dc[d, 0]] == dc[d, 1] and genes[b, dc[d, 2]] != dc[d, 3]:
                n_v += 1
        for d in range(cc.shape[0]):
            if genes[b, cc[d, 0]] == cc[d, 1] and genes[b, cc[d, 2]] == cc[d, 3]:
                n_v += 1
        tp = tstack[0]
        t_bad = tc_active and not tc_mask[tp]

        cr = n_c / c_max if c_max > 0 else 0.0
        vr = n_v / v_max if v_max > 0 else 0.0
        fit[b] = _band_fitness(u, cr, vr, n_c > 0, n_v > 0, t_bad)
        util[b] = u
        cviol[b] = n_c
        vviol[b] = n_v
        tviol[b] = 1 if t_bad else 0
        tpout[b] = tp


_evaluate_loop_nb = _jit(_evaluate_loop) if NUMBA_AVAILABLE else None


def _band_fitness_np(u, cr, vr, c_bad, v_bad, t_bad):
    cases = [
        ~c_bad & ~v_bad & ~t_bad,
        ~c_bad & ~v_bad & t_bad,
        ~c_bad & v_bad & ~t_bad,
        ~c_bad & v_bad & t_bad,
        c_bad & ~v_bad & ~t_bad,
        c_bad & ~v_bad & t_bad,
        c_bad & v_bad & ~t_bad,
    ]
    values = [
        (3.0 + u) / 4.0,
        np.minimum((2.0 + u) / 4.0, ONLY_T_CAP),
        (5.0 + u - vr) / 8.0,
        (3.0 + u - vr) / 8.0,
        (5.0 + u - cr) / 8.0,
        (3.0 + u - cr) / 8.0,
        (5.0 + u - cr - vr) / 12.0,
    ]
    return np.select(cases, values, default=(2.0 + u - cr - vr) / 12.0)


_NP_FOLD = {0: np.add, 1: np.multiply, 2: np.minimum, 3: np.maximum}


def _evaluate_numpy(genes, qos, tps, ops, args, agg, negative, weights, cmin, cmax,
                    qc, dc, cc, tc_mask, tc_active, rules, loop_rules):
    nb = genes.shape[0]
    k = qos.shape[2]
    stack: list = []
    tstack: list = []
    for op, arg in zip(ops.tolist(), args.tolist()):
        if op == 0:
            g = genes[:, arg]
            stack.append(qos[arg, g, :].copy())
            tstack.append(tps[arg, g])
        elif op == 2:
            x = stack[-1]
            for r in range(k):
                kind = agg[1, r]
                if kind == 0:
                    x[:, r] = float(arg) * x[:, r]
                elif kind == 1:
                    col = x[:, r].copy()
                    acc = col.copy()
                    for _ in range(arg - 1):
                        acc = acc * col
                    x[:, r] = acc
            tstack[-1] = loop_rules[tstack[-1]]
        else:
            row, ri = {1: (0, 0), 3: (2, 1), 4: (3, 2)}[op]
            operands = stack[-arg:]
            toperands = tstack[-arg:]
            del stack[-arg:]
            del tstack[-arg:]
            acc = operands[0]
            for r in range(k):
                fold = _NP_FOLD[int(agg[row, r])]
                col = acc[:, r]
                for other in operands[1:]:
                    col = fold(col, other[:, r])
                acc[:, r] = col
            tacc = toperands[0]
            for other in toperands[1:]:
                tacc = rules[ri, tacc, other]
            stack.append(acc)
            tstack.append(tacc)

    q = stack[0]
    tp = tstack[0]
    u = np.zeros(nb)
    n_c = np.zeros(nb, dtype=np.int64)
    for r in range(k):
        span = cmax[r] - cmin[r]
        if span > 0.0:
            term = (cmax[r] - q[:, r]) / span if negative[r] else (q[:, r] - cmin[r]) / span
        else:
            term = np.ones(nb)
        u = u + weights[r] * term
        if not np.isnan(qc[r]):
            n_c += (q[:, r] > qc[r]) if negative[r] else (q[:, r] < qc[r])
    u = np.minimum(np.maximum(u, 0.0), 1.0)

    n_v = np.zeros(nb, dtype=np.int64)
    for i, p, j, qq in dc:
        n_v += (genes[:, i] == p) & (genes[:, j] != qq)
    for i, p, j, qq in cc:
        n_v += (genes[:, i] == p) & (genes[:, j] == qq)
    t_bad = np.zeros(nb, dtype=bool) if not tc_active else ~tc_mask[tp]

    c_max = int(np.count_nonzero(~np.isnan(qc)))
    v_max = dc.shape[0] + cc.shape[0]
    cr = n_c / c_max if c_max > 0 else np.zeros(nb)
    vr = n_v / v_max if v_max > 0 else np.zeros(nb)
    fit = _band_fitness_np(u, cr, vr, n_c > 0, n_v > 0, t_bad)
    return fit, u, n_c, n_v, t_bad.astype(np.int64), q, tp.astype(np.int64)


def evaluate(cp, genes: np.ndarray, backend: str | None = None):
    """Evaluate a (B, n) matrix of full-pool offsets against a CompiledProblem."""
    from .compiled import TP_LOOP, TP_RULES

    genes = np.ascontiguousarray(genes, dtype=np.int64)
    if genes.ndim != 2 or genes.shape[1] != cp.n:
        raise ValueError(f"genes must have shape (B, {cp.n}), got {genes.shape}")
    backend = backend or default_backend()
    b = cp.bounds
    if backend == "numpy":
        return _evaluate_numpy(genes, cp.qos, cp.tps, cp.prog_op, cp.prog_arg, cp.agg,
                               cp.negative, cp.weights, b.composite_min, b.composite_max,
                               cp.qc, cp.dc, cp.cc, cp.tc_mask, cp.tc_active, TP_RULES, TP_LOOP)
    if backend != "numba" or not NUMBA_AVAILABLE:
        raise ValueError(f"unknown or unavailable backend {backend!r}")
    nb = genes.shape[0]
    fit = np.empty(nb)
    util = np.empty(nb)
    cviol = np.empty(nb, dtype=np.int64)
    vviol = np.empty(nb, dtype=np.int64)
    tviol = np.empty(nb, dtype=np.int64)
    qout = np.empty((nb, cp.k))
    tpout = np.empty(nb, dtype=np.int64)
    _evaluate_loop_nb(genes, cp.qos, cp.tps, cp.prog_op, cp.prog_arg, cp.stack_depth, cp.agg,
                      cp.negative, cp.weights, b.composite_min, b.composite_max, cp.qc,
                      cp.dc, cp.cc, cp.tc_mask, cp.tc_active, TP_RULES, TP_LOOP,
                      fit, util, cviol, vviol, tviol, qout, tpout)
    return fit, util, cviol, vviol, tviol, qout, tpout
