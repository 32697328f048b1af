"""Recursive QoS aggregation and transactional-property derivation over a workflow.

These functions walk the workflow tree directly and are the readable
reference path. The batch kernels in :mod:`pwss._kernels` evaluate a
compiled postorder program and are checked against this module in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .model import (
    TP,
    ConfigurationError,
    DerivedTP,
    Loop,
    Parallel,
    ProblemInstance,
    QoSAttribute,
    Serial,
    Switch,
    TaskRef,
    WorkflowError,
)

_FOLDS = {
    "sum": lambda a, b: a + b,
    "product": lambda a, b: a * b,
    "min": min,
    "max": max,
}


def _loop(kind: str, q: float, it: int) -> float:
    if kind == "scale":
        return float(it) * q
    if kind == "power":
        acc = q
        for _ in range(it - 1):
            acc = acc * q
        return acc
    if kind == "identity":
        return q
    raise ConfigurationError(f"unknown loop aggregator {kind!r}")


def _fold(kind: str, values: Sequence[float]) -> float:
    try:
        op = _FOLDS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown aggregator {kind!r}") from None
    return reduce(op, values)


def aggregate_attribute(workflow, value_of_task: Mapping[int, float], attr: QoSAttribute) -> float:
    """Aggregate one attribute bottom-up through the workflow."""
    agg = attr.aggregation

    def walk(node) -> float:
        if isinstance(node, TaskRef):
            return value_of_task[node.task]
        if isinstance(node, Loop):
            return _loop(agg.loop, walk(node.child), node.iterations)
        vals = [walk(c) for c in node.children]
        if isinstance(node, Serial):
            return _fold(agg.serial, vals)
        if isinstance(node, Parallel):
            return _fold(agg.parallel, vals)
        if isinstance(node, Switch):
            return _fold(agg.switch, vals)
        raise WorkflowError(f"not a workflow node: {node!r}")

    return walk(workflow)


# Transactional derivation rules. Rows are the accumulated property, columns
# the next operand; ``na`` (non-atomic) is absorbing and so not tabulated.
_P, _C, _R, _CR, _NA = "p", "c", "r", "cr", "na"
SERIAL_RULES = {
    _P: {_P: _NA, _C: _NA, _R: _P, _CR: _P},
    _C: {_P: _P, _C: _C, _R: _P, _CR: _C},
    _R: {_P: _NA, _C: _NA, _R: _R, _CR: _R},
    _CR: {_P: _P, _C: _C, _R: _R, _CR: _CR},
}
LOOP_RULES = {_P: _NA, _C: _C, _R: _R, _CR: _CR}
PARALLEL_RULES = {
    _P: {_P: _NA, _C: _NA, _R: _NA, _CR: _P},
    _C: {_P: _NA, _C: _C, _R: _NA, _CR: _C},
    _R: {_P: _NA, _C: _NA, _R: _R, _CR: _R},
    _CR: {_P: _P, _C: _C, _R: _R, _CR: _CR},
}
SWITCH_RULES = {
    _P: {_P: _P, _C: _P, _R: _P, _CR: _P},
    _C: {_P: _P, _C: _C, _R: _P, _CR: _C},
    _R: {_P: _P, _C: _P, _R: _R, _CR: _R},
    _CR: {_P: _P, _C: _C, _R: _R, _CR: _CR},
}


def _combine(rules: dict, acc: str, nxt: str) -> str:
    if acc == _NA or nxt == _NA:
        return _NA
    return rules[acc][nxt]


def derive_tp(workflow, tp_of_task: Mapping[int, TP]) -> DerivedTP:
    """Transactional property of the composite; n-ary patterns fold left in child order."""

    def walk(node) -> str:
        if isinstance(node, TaskRef):
            return TP(tp_of_task[node.task]).value
        if isinstance(node, Loop):
            inner = walk(node.child)
            return _NA if inner == _NA else LOOP_RULES[inner]
        if isinstance(node, Serial):
            rules = SERIAL_RULES
        elif isinstance(node, Parallel):
            rules = PARALLEL_RULES
        elif isinstance(node, Switch):
            rules = SWITCH_RULES
        else:
            raise WorkflowError(f"not a workflow node: {node!r}")
        vals = [walk(c) for c in node.children]
        return reduce(lambda a, b: _combine(rules, a, b), vals)

    return DerivedTP(walk(workflow))


@dataclass(frozen=True)
class QoSBounds:
    task_min: np.ndarray  # (n, k)
    task_max: np.ndarray  # (n, k)
    composite_min: np.ndarray  # (k,)
    composite_max: np.ndarray  # (k,)


def compute_bounds(instance: ProblemInstance) -> QoSBounds:
    """Per-task extremes over each pool and their aggregates through the workflow."""
    qos = [np.array([s.qos for s in pool], dtype=float) for pool in instance.tasks]
    tmin = np.array([q.min(axis=0) for q in qos])
    tmax = np.array([q.max(axis=0) for q in qos])
    cmin = np.empty(instance.k)
    cmax = np.empty(instance.k)
    for r, attr in enumerate(instance.attributes):
        cmin[r] = aggregate_attribute(
            instance.workflow, {i + 1: tmin[i, r] for i in range(instance.n)}, attr)
        cmax[r] = aggregate_attribute(
            instance.workflow, {i + 1: tmax[i, r] for i in range(instance.n)}, attr)
    return QoSBounds(tmin, tmax, cmin, cmax)


def aggregate_composite(instance: ProblemInstance, genes: Sequence[str]) -> np.ndarray:
    """Composite QoS vector for an assignment of candidate ids to tasks 1..n."""
    chosen = [instance.candidate(i + 1, g) for i, g in enumerate(genes)]
    return np.array([
        aggregate_attribute(instance.workflow, {i + 1: s.qos[r] for i, s in enumerate(chosen)}, attr)
        for r, attr in enumerate(instance.attributes)
    ])


def composite_tp(instance: ProblemInstance, genes: Sequence[str]) -> DerivedTP:
    return derive_tp(instance.workflow,
                     {i + 1: instance.candidate(i + 1, g).tp for i, g in enumerate(genes)})
