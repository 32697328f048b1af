"""Flat array form of a ProblemInstance consumed by the batch kernels.

Genes are offsets into the *full* candidate pool of each task, so a reduced
working pool is just a subset of offsets and never re-indexes anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import aggregation
from .model import (
    FOLD_KINDS,
    LOOP_KINDS,
    TP_CODES,
    Loop,
    Parallel,
    ProblemInstance,
    Serial,
    Switch,
    TaskRef,
)

OP_TASK, OP_SERIAL, OP_LOOP, OP_PARALLEL, OP_SWITCH = range(5)
NA = TP_CODES["na"]


def _rule_matrix(rules: dict) -> np.ndarray:
    out = np.full((5, 5), NA, dtype=np.int64)
    for row, cols in rules.items():
        for col, res in cols.items():
            out[TP_CODES[row], TP_CODES[col]] = TP_CODES[res]
    return out


TP_RULES = np.stack([
    _rule_matrix(aggregation.SERIAL_RULES),
    _rule_matrix(aggregation.PARALLEL_RULES),
    _rule_matrix(aggregation.SWITCH_RULES),
])
TP_LOOP = np.full(5, NA, dtype=np.int64)
for _row, _res in aggregation.LOOP_RULES.items():
    TP_LOOP[TP_CODES[_row]] = TP_CODES[_res]


def compile_workflow(workflow) -> tuple[np.ndarray, np.ndarray, int]:
    """Postorder program (ops, args) plus the stack depth it needs."""
    ops: list[int] = []
    args: list[int] = []
    depth = 0
    max_depth = 0

    def emit(op, arg, delta):
        nonlocal depth, max_depth
        ops.append(op)
        args.append(arg)
        depth += delta
        max_depth = max(max_depth, depth)

    def walk(node):
        if isinstance(node, TaskRef):
            emit(OP_TASK, node.task - 1, 1)
        elif isinstance(node, Loop):
            walk(node.child)
            emit(OP_LOOP, node.iterations, 0)
        else:
            for child in node.children:
                walk(child)
            op = {Serial: OP_SERIAL, Parallel: OP_PARALLEL, Switch: OP_SWITCH}[type(node)]
            emit(op, len(node.children), 1 - len(node.children))

    walk(workflow)
    return np.array(ops, dtype=np.int64), np.array(args, dtype=np.int64), max_depth


@dataclass(frozen=True, eq=False)
class CompiledProblem:
    n: int
    k: int
    pool_sizes: np.ndarray
    ids: list
    offset_of: list
    qos: np.ndarray
    tps: np.ndarray
    prog_op: np.ndarray
    prog_arg: np.ndarray
    stack_depth: int
    agg: np.ndarray
    negative: np.ndarray
    weights: np.ndarray
    qc: np.ndarray
    dc: np.ndarray
    cc: np.ndarray
    tc_mask: np.ndarray
    tc_active: bool
    bounds: aggregation.QoSBounds

    @property
    def c_max(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.qc)))

    @property
    def v_max(self) -> int:
        return len(self.dc) + len(self.cc)

    def offsets(self, genes) -> np.ndarray:
        return np.array([self.offset_of[i][g] for i, g in enumerate(genes)], dtype=np.int64)

    def genes(self, offsets) -> tuple[str, ...]:
        return tuple(self.ids[i][int(o)] for i, o in enumerate(offsets))


def _ic_array(instance: ProblemInstance, family, offset_of) -> np.ndarray:
    rows = [(ic.i - 1, offset_of[ic.i - 1][ic.p], ic.j - 1, offset_of[ic.j - 1][ic.q])
            for ic in family]
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def compile_instance(instance: ProblemInstance) -> CompiledProblem:
    n, k = instance.n, instance.k
    sizes = np.array(instance.pool_sizes, dtype=np.int64)
    mmax = int(sizes.max())
    qos = np.full((n, mmax, k), np.nan)
    tps = np.full((n, mmax), NA, dtype=np.int64)
    ids, offset_of = [], []
    for i, pool in enumerate(instance.tasks):
        ids.append([s.id for s in pool])
        offset_of.append({s.id: j for j, s in enumerate(pool)})
        qos[i, : len(pool)] = [s.qos for s in pool]
        tps[i, : len(pool)] = [TP_CODES[s.tp.value] for s in pool]
    ops, args, depth = compile_workflow(instance.workflow)
    agg = np.empty((4, k), dtype=np.int64)
    for r, attr in enumerate(instance.attributes):
        a = attr.aggregation
        agg[0, r] = FOLD_KINDS.index(a.serial)
        agg[1, r] = LOOP_KINDS.index(a.loop)
        agg[2, r] = FOLD_KINDS.index(a.parallel)
        agg[3, r] = FOLD_KINDS.index(a.switch)
    tc_mask = np.zeros(5, dtype=np.bool_)
    for t in instance.tc:
        tc_mask[TP_CODES[t.value]] = True
    return CompiledProblem(
        n=n,
        k=k,
        pool_sizes=sizes,
        ids=ids,
        offset_of=offset_of,
        qos=qos,
        tps=tps,
        prog_op=ops,
        prog_arg=args,
        stack_depth=depth,
        agg=agg,
        negative=np.array([a.negative for a in instance.attributes], dtype=np.bool_),
        weights=np.array([a.weight for a in instance.attributes], dtype=float),
        qc=np.array([np.nan if c is None else c for c in instance.qc], dtype=float),
        dc=_ic_array(instance, instance.dc, offset_of),
        cc=_ic_array(instance, instance.cc, offset_of),
        tc_mask=tc_mask,
        tc_active=bool(instance.tc),
        bounds=aggregation.compute_bounds(instance),
    )
