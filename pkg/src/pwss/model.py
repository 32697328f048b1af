"""Domain types for service-selection problems.

Everything here is immutable after construction. Task indices inside the
workflow and the interservice constraints are 1-based, matching the way
problems are written down; compiled arrays (see :mod:`pwss.compiled`) switch
to 0-based offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterator, Optional, Union


class WorkflowError(ValueError):
    """Structural problem in a workflow tree."""


class ConfigurationError(ValueError):
    """Bad parameter or attribute configuration."""


class InvalidInstanceError(ValueError):
    """Raised when solving is attempted on an instance that fails validation."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid instance: " + "; ".join(problems))


class Direction(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class TP(str, Enum):
    """Failure-atomic transactional property of a single service."""

    P = "p"
    C = "c"
    R = "r"
    CR = "cr"


class DerivedTP(str, Enum):
    """Transactional property of a composite; ``NON_ATOMIC`` only arises by derivation."""

    P = "p"
    C = "c"
    R = "r"
    CR = "cr"
    NON_ATOMIC = "na"


# integer codes shared by the kernels
TP_CODES = {"p": 0, "c": 1, "r": 2, "cr": 3, "na": 4}
TP_FROM_CODE = {v: DerivedTP(k) for k, v in TP_CODES.items()}

FOLD_KINDS = ("sum", "product", "min", "max")
LOOP_KINDS = ("scale", "power", "identity")


@dataclass(frozen=True)
class AggregationProfile:
    """Per-pattern aggregators for one attribute (a row of the aggregation table).

    ``loop`` is ``scale`` (it * q), ``power`` (q ** it) or ``identity`` (q).
    """

    serial: str
    loop: str
    parallel: str
    switch: str

    def problems(self) -> list[str]:
        out = []
        for pattern in ("serial", "parallel", "switch"):
            if getattr(self, pattern) not in FOLD_KINDS:
                out.append(f"unknown {pattern} aggregator {getattr(self, pattern)!r}")
        if self.loop not in LOOP_KINDS:
            out.append(f"unknown loop aggregator {self.loop!r}")
        return out

    @property
    def uses_product(self) -> bool:
        return "product" in (self.serial, self.parallel, self.switch) or self.loop == "power"

    def to_dict(self) -> dict:
        return {"serial": self.serial, "loop": self.loop,
                "parallel": self.parallel, "switch": self.switch}


PROFILES = {
    "response_time": AggregationProfile("sum", "scale", "max", "max"),
    "price": AggregationProfile("sum", "scale", "sum", "max"),
    "availability": AggregationProfile("product", "power", "product", "min"),
    "throughput": AggregationProfile("min", "identity", "min", "min"),
}


def profile(spec: Union[str, dict, AggregationProfile]) -> AggregationProfile:
    """Resolve a preset name or an explicit mapping into an AggregationProfile."""
    if isinstance(spec, AggregationProfile):
        return spec
    if isinstance(spec, str):
        try:
            return PROFILES[spec]
        except KeyError:
            raise ConfigurationError(
                f"unknown aggregation preset {spec!r}; expected one of {sorted(PROFILES)}"
            ) from None
    try:
        return AggregationProfile(spec["serial"], spec["loop"], spec["parallel"], spec["switch"])
    except KeyError as exc:
        raise ConfigurationError(f"aggregation lacks an aggregator for {exc.args[0]}") from None


@dataclass(frozen=True)
class QoSAttribute:
    name: str
    direction: Direction
    aggregation: AggregationProfile
    weight: float
    unit: str = ""

    @property
    def negative(self) -> bool:
        return self.direction is Direction.NEGATIVE


@dataclass(frozen=True)
class CandidateService:
    id: str
    task: int
    qos: tuple[float, ...]
    tp: TP


# -- workflow tree ----------------------------------------------------------


@dataclass(frozen=True)
class TaskRef:
    task: int


@dataclass(frozen=True)
class Serial:
    children: tuple


@dataclass(frozen=True)
class Loop:
    child: object
    iterations: int


@dataclass(frozen=True)
class Parallel:
    children: tuple


@dataclass(frozen=True)
class Switch:
    children: tuple


WorkflowNode = Union[TaskRef, Serial, Loop, Parallel, Switch]
NARY = (Serial, Parallel, Switch)


def _walk_tasks(node) -> Iterator[int]:
    if isinstance(node, TaskRef):
        yield node.task
    elif isinstance(node, Loop):
        yield from _walk_tasks(node.child)
    elif isinstance(node, NARY):
        for child in node.children:
            yield from _walk_tasks(child)
    else:
        raise WorkflowError(f"not a workflow node: {node!r}")


def task_indices(workflow) -> list[int]:
    """Left-to-right depth-first list of task indices; must be a permutation of 1..n."""
    found = list(_walk_tasks(workflow))
    seen = set()
    for t in found:
        if t in seen:
            raise WorkflowError(f"duplicate task index {t}")
        seen.add(t)
    missing = set(range(1, len(found) + 1)) - seen
    if missing:
        raise WorkflowError(f"task indices {sorted(missing)} missing from workflow")
    return found


def _structure_problems(node, out: list[str]) -> None:
    if isinstance(node, TaskRef):
        if not isinstance(node.task, int) or isinstance(node.task, bool):
            out.append(f"task reference {node.task!r} is not an integer")
    elif isinstance(node, Loop):
        if not isinstance(node.iterations, int) or node.iterations < 1:
            out.append(f"loop iterations must be ≥ 1 (got {node.iterations!r})")
        _structure_problems(node.child, out)
    elif isinstance(node, NARY):
        if len(node.children) < 2:
            out.append(f"{type(node).__name__.lower()} needs at least 2 children")
        for child in node.children:
            _structure_problems(child, out)
    else:
        out.append(f"not a workflow node: {node!r}")


def concat(*workflows) -> Serial:
    """Serially join workflows, flattening top-level serial nodes."""
    children = []
    for wf in workflows:
        children.extend(wf.children if isinstance(wf, Serial) else (wf,))
    return Serial(tuple(children))


def shift_tasks(node, offset: int):
    """Copy of ``node`` with every task index increased by ``offset``."""
    if isinstance(node, TaskRef):
        return TaskRef(node.task + offset)
    if isinstance(node, Loop):
        return Loop(shift_tasks(node.child, offset), node.iterations)
    return type(node)(tuple(shift_tasks(c, offset) for c in node.children))


# -- constraints and instances ----------------------------------------------


class ICKind(str, Enum):
    DEPENDENCY = "dependency"
    CONFLICT = "conflict"


@dataclass(frozen=True)
class InterserviceConstraint:
    """If candidate ``p`` serves task ``i`` then ``q`` must (dependency) or must not
    (conflict) serve task ``j``."""

    kind: ICKind
    i: int
    p: str
    j: int
    q: str

    @property
    def key(self) -> tuple:
        return (self.i, self.p, self.j, self.q)


@dataclass(frozen=True)
class ProblemInstance:
    tasks: tuple[tuple[CandidateService, ...], ...]
    workflow: WorkflowNode
    attributes: tuple[QoSAttribute, ...]
    qc: tuple[Optional[float], ...]
    dc: tuple[InterserviceConstraint, ...] = ()
    cc: tuple[InterserviceConstraint, ...] = ()
    tc: frozenset = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def k(self) -> int:
        return len(self.attributes)

    @property
    def pool_sizes(self) -> list[int]:
        return [len(pool) for pool in self.tasks]

    @property
    def search_space(self) -> int:
        return math.prod(self.pool_sizes)

    @cached_property
    def compiled(self):
        from .compiled import compile_instance

        return compile_instance(self)

    def candidate(self, task: int, cid: str) -> CandidateService:
        return self.tasks[task - 1][self.compiled.offset_of[task - 1][cid]]


@dataclass(frozen=True)
class Individual:
    """An evaluated assignment; ``genes[i]`` is the candidate id chosen for task i+1."""

    genes: tuple[str, ...]
    utility: float
    qc_violations: int
    ic_violations: int
    tc_violated: int
    fitness: float

    @property
    def feasible(self) -> bool:
        return self.qc_violations == 0 and self.ic_violations == 0 and self.tc_violated == 0


def validate_instance(instance: ProblemInstance) -> list[str]:
    """Return every violated structural invariant; an empty list means valid."""
    out: list[str] = []
    k = instance.k
    if k == 0:
        out.append("at least one QoS attribute is required")
    for attr in instance.attributes:
        out.extend(f"attribute {attr.name!r}: {p}" for p in attr.aggregation.problems())
        if not 0.0 <= attr.weight <= 1.0:
            out.append(f"attribute {attr.name!r}: weight {attr.weight} outside [0, 1]")
    wsum = sum(a.weight for a in instance.attributes)
    if abs(wsum - 1.0) > 1e-9:
        out.append(f"attribute weights sum to {wsum!r}, expected 1")

    if instance.n < 1:
        out.append("at least one task is required")
    ids: dict[str, int] = {}
    for i, pool in enumerate(instance.tasks, start=1):
        if not pool:
            out.append(f"task {i} has an empty candidate pool")
        for s in pool:
            if s.id in ids:
                out.append(f"candidate id {s.id!r} is not unique")
            ids[s.id] = i
            if s.task != i:
                out.append(f"candidate {s.id!r} claims task {s.task} but sits in pool {i}")
            if len(s.qos) != k:
                out.append(f"candidate {s.id!r} has {len(s.qos)} QoS values, expected {k}")
                continue
            if not isinstance(s.tp, TP):
                out.append(f"candidate {s.id!r} has invalid transactional property {s.tp!r}")
            for attr, v in zip(instance.attributes, s.qos):
                if not math.isfinite(v):
                    out.append(f"candidate {s.id!r}: non-finite {attr.name}")
                elif v < 0:
                    out.append(f"candidate {s.id!r}: negative {attr.name} {v}")
                elif attr.aggregation.uses_product and v > 1.0:
                    out.append(f"candidate {s.id!r}: {attr.name} {v} outside [0, 1] "
                               "for a product-aggregated attribute")

    structure: list[str] = []
    _structure_problems(instance.workflow, structure)
    out.extend(structure)
    if not structure:
        try:
            order = task_indices(instance.workflow)
            if len(order) != instance.n:
                out.append(f"workflow has {len(order)} tasks but {instance.n} pools are given")
        except WorkflowError as exc:
            out.append(str(exc))

    if len(instance.qc) != k:
        out.append(f"qc has {len(instance.qc)} entries, expected {k}")
    for r, c in enumerate(instance.qc):
        if c is not None and not math.isfinite(c):
            out.append(f"qc[{r}] is not finite")

    for family, kind in ((instance.dc, ICKind.DEPENDENCY), (instance.cc, ICKind.CONFLICT)):
        for ic in family:
            if ic.kind is not kind:
                out.append(f"{ic.key} listed under {kind.value} but has kind {ic.kind.value}")
            if ic.i == ic.j:
                out.append(f"interservice constraint {ic.key} relates a task to itself")
            if ids.get(ic.p) != ic.i:
                out.append(f"interservice constraint {ic.key}: {ic.p!r} is not a candidate of task {ic.i}")
            if ids.get(ic.q) != ic.j:
                out.append(f"interservice constraint {ic.key}: {ic.q!r} is not a candidate of task {ic.j}")
    both = {ic.key for ic in instance.dc} & {ic.key for ic in instance.cc}
    for key in sorted(both):
        out.append(f"interservice tuple {key} is both a dependency and a conflict")

    for t in instance.tc:
        if not isinstance(t, TP):
            out.append(f"transactional constraint {t!r} is not one of p, c, r, cr")
    return out


def require_valid(instance: ProblemInstance) -> None:
    problems = validate_instance(instance)
    if problems:
        raise InvalidInstanceError(problems)
