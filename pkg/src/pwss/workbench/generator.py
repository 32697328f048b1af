"""Problem generation: the canonical 10-task workflow, experiment instances and
small random instances for testing."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..aggregation import compute_bounds
from ..model import (
    TP,
    CandidateService,
    ConfigurationError,
    Direction,
    ICKind,
    InterserviceConstraint,
    Loop,
    Parallel,
    ProblemInstance,
    QoSAttribute,
    Serial,
    Switch,
    TaskRef,
    concat,
    profile,
    shift_tasks,
)
from . import qws

LOOP_ITERATIONS = 5
TP_LIST = list(TP)


def canonical_workflow() -> Serial:
    """Ten tasks covering all four patterns."""
    t = TaskRef
    return Serial((
        t(1),
        Parallel((t(2), t(3))),
        t(4),
        Switch((t(5), t(6))),
        Loop(t(7), LOOP_ITERATIONS),
        t(8),
        t(9),
        t(10),
    ))


def workflow_for(n_tasks: int) -> Serial:
    """Serial concatenation of ``n_tasks / 10`` canonical workflows."""
    if n_tasks < 10 or n_tasks % 10:
        raise ConfigurationError(f"number of tasks must be a positive multiple of 10, got {n_tasks}")
    base = canonical_workflow()
    return concat(*(shift_tasks(base, 10 * c) for c in range(n_tasks // 10)))


@dataclass(frozen=True)
class GeneratorSpec:
    n_tasks: int
    m_per_task: int
    num_qc: int = 0
    num_ic: int = 0
    tc: frozenset = field(default_factory=frozenset)
    qws_path: Optional[str] = None
    seed: int = 0


def candidate_id(task: int, j: int) -> str:
    return f"t{task:03d}s{j:04d}"


def _pool_values(spec: GeneratorSpec, mapping, rng: np.random.Generator) -> list[np.ndarray]:
    path = spec.qws_path
    if path:
        records = np.array([r.qos for r in qws.cached_qws(path).records])
        pools = []
        for _ in range(spec.n_tasks):
            replace = len(records) < spec.m_per_task
            pick = rng.choice(len(records), size=spec.m_per_task, replace=replace)
            pools.append(records[pick])
        return pools
    lo = np.array([m.normalise(m.range[0]) for m in mapping])
    hi = np.array([m.normalise(m.range[1]) for m in mapping])
    return [lo + (hi - lo) * rng.random((spec.m_per_task, len(mapping))) for _ in range(spec.n_tasks)]


def random_interservice(tasks, count: int, rng: np.random.Generator):
    """``count`` random (i, p, j, q) tuples, i != j, half dependencies and half conflicts
    on average; duplicates and dependency/conflict contradictions are redrawn."""
    n = len(tasks)
    if count and n < 2:
        raise ConfigurationError("interservice constraints need at least two tasks")
    seen: dict[tuple, ICKind] = {}
    attempts = 0
    while len(seen) < count:
        attempts += 1
        if attempts > 100 * count + 1000:
            raise ConfigurationError(f"could not place {count} distinct interservice constraints")
        i, j = rng.choice(n, size=2, replace=False)
        p = tasks[i][rng.integers(len(tasks[i]))].id
        q = tasks[j][rng.integers(len(tasks[j]))].id
        kind = ICKind.DEPENDENCY if rng.random() < 0.5 else ICKind.CONFLICT
        key = (int(i) + 1, p, int(j) + 1, q)
        if key in seen:
            continue
        seen[key] = kind
    dc = tuple(InterserviceConstraint(k, *key) for key, k in seen.items() if k is ICKind.DEPENDENCY)
    cc = tuple(InterserviceConstraint(k, *key) for key, k in seen.items() if k is ICKind.CONFLICT)
    return dc, cc


def midpoint_bounds(base: ProblemInstance, count: int) -> tuple:
    """Bounds (Q'min + Q'max) / 2 on the first ``count`` attributes."""
    if count > base.k:
        raise ConfigurationError(f"cannot constrain {count} of {base.k} attributes")
    b = compute_bounds(base)
    return tuple(float((b.composite_min[r] + b.composite_max[r]) / 2) if r < count else None
                 for r in range(base.k))


def generate_instance(spec: GeneratorSpec, mapping=None) -> ProblemInstance:
    mapping = mapping or qws.load_mapping()
    workflow = workflow_for(spec.n_tasks)
    if spec.m_per_task < 1:
        raise ConfigurationError("at least one candidate per task is required")
    rng = np.random.default_rng(spec.seed)
    values = _pool_values(spec, mapping, rng)
    tasks = tuple(
        tuple(CandidateService(candidate_id(i, j), i, tuple(float(x) for x in row),
                               TP_LIST[int(rng.integers(4))])
              for j, row in enumerate(pool, start=1))
        for i, pool in enumerate(values, start=1)
    )
    attrs = qws.attributes(mapping)
    base = ProblemInstance(tasks, workflow, attrs, (None,) * len(attrs))
    qc = midpoint_bounds(base, spec.num_qc)
    dc, cc = random_interservice(tasks, spec.num_ic, rng)
    return ProblemInstance(tasks, workflow, attrs, qc, dc, cc, frozenset(TP(t) for t in spec.tc))


# -- small random instances --------------------------------------------------

TABLE_ATTRIBUTES = (
    QoSAttribute("response_time", Direction.NEGATIVE, profile("response_time"), 0.25, "ms"),
    QoSAttribute("price", Direction.NEGATIVE, profile("price"), 0.25, "$"),
    QoSAttribute("availability", Direction.POSITIVE, profile("availability"), 0.25, "fraction"),
    QoSAttribute("throughput", Direction.POSITIVE, profile("throughput"), 0.25, "invokes/s"),
)
_TABLE_RANGES = ((10.0, 1000.0), (1.0, 100.0), (0.5, 1.0), (1.0, 100.0))


def random_workflow(n: int, rng: np.random.Generator, loop_prob: float = 0.25):
    """Random pattern tree over tasks 1..n, keeping task order left to right."""

    def build(lo: int, hi: int):
        size = hi - lo
        if size == 1:
            node = TaskRef(lo + 1)
        else:
            parts = int(rng.integers(2, min(size, 3) + 1))
            cuts = np.sort(rng.choice(np.arange(lo + 1, hi), size=parts - 1, replace=False))
            edges = [lo, *cuts.tolist(), hi]
            cls = (Serial, Parallel, Switch)[int(rng.integers(3))]
            node = cls(tuple(build(a, b) for a, b in zip(edges, edges[1:])))
        if rng.random() < loop_prob:
            node = Loop(node, int(rng.integers(1, 6)))
        return node

    return build(0, n)


def random_instance(n: int, m: int, rng: np.random.Generator, *, qc_prob: float = 0.0,
                    num_ic: int = 0, tc: Optional[frozenset] = None,
                    random_tc: bool = False) -> ProblemInstance:
    """Small instance over the four tabulated attributes with optional random constraints.

    QoS bounds are drawn uniformly between the composite extremes.
    """
    workflow = random_workflow(n, rng)
    lo = np.array([r[0] for r in _TABLE_RANGES])
    hi = np.array([r[1] for r in _TABLE_RANGES])
    tasks = tuple(
        tuple(CandidateService(candidate_id(i, j), i,
                               tuple(float(x) for x in lo + (hi - lo) * rng.random(len(lo))),
                               TP_LIST[int(rng.integers(4))])
              for j in range(1, m + 1))
        for i in range(1, n + 1)
    )
    base = ProblemInstance(tasks, workflow, TABLE_ATTRIBUTES, (None,) * 4)
    qc: tuple = (None,) * 4
    if qc_prob > 0:
        b = compute_bounds(base)
        qc = tuple(float(b.composite_min[r] + rng.random() * (b.composite_max[r] - b.composite_min[r]))
                   if rng.random() < qc_prob else None for r in range(4))
    dc, cc = random_interservice(tasks, num_ic, rng) if num_ic else ((), ())
    if random_tc:
        tc = frozenset(t for t in TP_LIST if rng.random() < 0.5)
    return ProblemInstance(tasks, workflow, TABLE_ATTRIBUTES, qc, dc, cc, tc or frozenset())


def default_qws_path() -> Optional[str]:
    return os.environ.get("PWSS_QWS_PATH") or None
