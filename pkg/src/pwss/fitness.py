"""Feasibility checks, violation counting and the four-band fitness function.

The fitness range [0, 1] is cut into four equal bands by how many kinds of
constraint (global QoS, interservice, transactional) an assignment violates.
Inside a band, the row's function F is mapped linearly from its own range
onto the band. ``FITNESS_TABLE`` holds each row's closed form together with
its (F, fr, cr) triple so :func:`map_range` can prove the closed forms.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .aggregation import aggregate_composite, composite_tp, compute_bounds
from .model import ConfigurationError, DerivedTP, Individual, ProblemInstance
from .scoring import composite_utility


@dataclass(frozen=True)
class ViolationProfile:
    C: int
    V: int
    T: int
    c_max: int
    v_max: int

    @property
    def c_ratio(self) -> float:
        return self.C / self.c_max if self.c_max else 0.0

    @property
    def v_ratio(self) -> float:
        return self.V / self.v_max if self.v_max else 0.0

    @property
    def kinds_violated(self) -> int:
        return int(self.C > 0) + int(self.V > 0) + int(self.T > 0)


def count_qc_violations(instance: ProblemInstance, genes: Sequence[str]) -> int:
    q = aggregate_composite(instance, genes)
    count = 0
    for attr, c, value in zip(instance.attributes, instance.qc, q):
        if c is None:
            continue
        if (attr.negative and value > c) or (not attr.negative and value < c):
            count += 1
    return count


def count_ic_violations(instance: ProblemInstance, genes: Sequence[str]) -> int:
    count = 0
    for d in instance.dc:
        if genes[d.i - 1] == d.p and genes[d.j - 1] != d.q:
            count += 1
    for c in instance.cc:
        if genes[c.i - 1] == c.p and genes[c.j - 1] == c.q:
            count += 1
    return count


def tc_violation(instance: ProblemInstance, genes: Sequence[str]) -> int:
    if not instance.tc:
        return 0
    derived = composite_tp(instance, genes)
    if derived is DerivedTP.NON_ATOMIC:
        return 1
    return 0 if derived.value in {t.value for t in instance.tc} else 1


def violation_profile(instance: ProblemInstance, genes: Sequence[str]) -> ViolationProfile:
    return ViolationProfile(
        C=count_qc_violations(instance, genes),
        V=count_ic_violations(instance, genes),
        T=tc_violation(instance, genes),
        c_max=sum(c is not None for c in instance.qc),
        v_max=len(instance.dc) + len(instance.cc),
    )


def map_range(value: float, fr: tuple[float, float], cr: tuple[float, float]) -> float:
    """Linearly map ``value`` from the function range ``fr`` onto the band ``cr``."""
    fr_min, fr_max = fr
    cr_min, cr_max = cr
    if not fr_max > fr_min:
        raise ConfigurationError(f"degenerate function range {fr}")
    return cr_min + (value - fr_min) * (cr_max - cr_min) / (fr_max - fr_min)


@dataclass(frozen=True)
class FitnessRow:
    c_bad: bool
    v_bad: bool
    t_bad: bool
    function: Callable[[float, float, float], float]
    fr: tuple[float, float]
    cr: tuple[float, float]
    closed_form: Callable[[float, float, float], float]


# (c_bad, v_bad, t_bad) -> row; callables take (u, c_ratio, v_ratio)
FITNESS_TABLE = [
    FitnessRow(False, False, False, lambda u, c, v: u, (0, 1), (0.75, 1.0),
               lambda u, c, v: (3 + u) / 4),
    FitnessRow(False, False, True, lambda u, c, v: u, (0, 1), (0.5, 0.75),
               lambda u, c, v: (2 + u) / 4),
    FitnessRow(False, True, False, lambda u, c, v: u - v, (-1, 1), (0.5, 0.75),
               lambda u, c, v: (5 + u - v) / 8),
    FitnessRow(False, True, True, lambda u, c, v: u - v, (-1, 1), (0.25, 0.5),
               lambda u, c, v: (3 + u - v) / 8),
    FitnessRow(True, False, False, lambda u, c, v: u - c, (-1, 1), (0.5, 0.75),
               lambda u, c, v: (5 + u - c) / 8),
    FitnessRow(True, False, True, lambda u, c, v: u - c, (-1, 1), (0.25, 0.5),
               lambda u, c, v: (3 + u - c) / 8),
    FitnessRow(True, True, False, lambda u, c, v: u - c - v, (-2, 1), (0.25, 0.5),
               lambda u, c, v: (5 + u - c - v) / 12),
    FitnessRow(True, True, True, lambda u, c, v: u - c - v, (-2, 1), (0.0, 0.25),
               lambda u, c, v: (2 + u - c - v) / 12),
]
_ROW = {(r.c_bad, r.v_bad, r.t_bad): r for r in FITNESS_TABLE}

BANDS = {0: (0.75, 1.0), 1: (0.5, 0.75), 2: (0.25, 0.5), 3: (0.0, 0.25)}


def in_band(value: float, kinds_violated: int) -> bool:
    """Whether ``value`` lies in the band for that many violated kinds (top band closed)."""
    lo, hi = BANDS[kinds_violated]
    return lo <= value <= hi if kinds_violated == 0 else lo <= value < hi


def fitness_from_profile(utility: float, profile: ViolationProfile) -> float:
    row = _ROW[(profile.C > 0, profile.V > 0, profile.T > 0)]
    value = row.closed_form(utility, profile.c_ratio, profile.v_ratio)
    if row.t_bad and not (row.c_bad or row.v_bad):
        value = min(value, _kernels.ONLY_T_CAP)
    return value


def fitness(instance: ProblemInstance, genes: Sequence[str], bounds=None) -> float:
    """Fitness of an assignment, computed through the recursive reference path."""
    bounds = bounds or compute_bounds(instance)
    u = composite_utility(instance, genes, bounds)
    return fitness_from_profile(u, violation_profile(instance, genes))


def evaluate_reference(instance: ProblemInstance, genes: Sequence[str]) -> Individual:
    bounds = instance.compiled.bounds
    prof = violation_profile(instance, genes)
    u = composite_utility(instance, genes, bounds)
    return Individual(tuple(genes), u, prof.C, prof.V, prof.T, fitness_from_profile(u, prof))


class Evaluator:
    """Batch fitness evaluation with a budget counter.

    The counter is guarded by a lock so concurrent evaluators can share one
    instance.
    """

    def __init__(self, instance: ProblemInstance, backend: str | None = None):
        self.instance = instance
        self.cp = instance.compiled
        self.backend = backend or _kernels.default_backend()
        self._lock = threading.Lock()
        self._count = 0

    @property
    def count(self) -> int:
        return self._count

    def __call__(self, offsets: np.ndarray) -> np.ndarray:
        """Fitness of each row of ``offsets``; counts one evaluation per row."""
        fit = _kernels.evaluate(self.cp, offsets, self.backend)[0]
        with self._lock:
            self._count += len(fit)
        return fit

    def details(self, offsets: np.ndarray):
        """Full kernel output; does not touch the budget counter."""
        return _kernels.evaluate(self.cp, np.atleast_2d(offsets), self.backend)

    def individual(self, offsets) -> Individual:
        fit, u, c, v, t, _, _ = self.details(offsets)
        return Individual(self.cp.genes(np.asarray(offsets).ravel()), float(u[0]), int(c[0]),
                          int(v[0]), int(t[0]), float(fit[0]))


def evaluate(instance: ProblemInstance, genes: Sequence[str], backend: str | None = None) -> Individual:
    """Evaluate one assignment of candidate ids through the batch kernel."""
    ev = Evaluator(instance, backend)
    return ev.individual(instance.compiled.offsets(genes))
