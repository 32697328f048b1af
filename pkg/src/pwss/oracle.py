"""Exhaustive enumeration of every assignment, for ground truth on small instances."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .model import Individual, ProblemInstance, require_valid

DEFAULT_LIMIT = 10**7
CHUNK = 1 << 16


class SearchSpaceTooLarge(ValueError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"search space of {size} assignments exceeds the limit of {limit}")


@dataclass(frozen=True)
class OracleResult:
    best: Individual
    best_fitness: float
    best_feasible: Optional[Individual]
    search_space: int


def _scan(cp, dims, start: int, stop: int, backend: str):
    """Best (fitness, index) and best feasible (utility, index) over one index range.

    Indices enumerate assignments lexicographically; ties keep the lowest index.
    """
    flat = np.arange(start, stop, dtype=np.int64)
    genes = np.stack(np.unravel_index(flat, dims), axis=1)
    fit, u, c, v, t, _, _ = _kernels.evaluate(cp, genes, backend)
    i = int(np.argmax(fit))
    best = (float(fit[i]), start + i)
    feasible = (c == 0) & (v == 0) & (t == 0)
    if feasible.any():
        masked = np.where(feasible, u, -np.inf)
        j = int(np.argmax(masked))
        return best, (float(u[j]), start + j)
    return best, None


def _better(a, b):
    # larger value wins, then the lexicographically earlier assignment
    if b is None:
        return a
    if a is None:
        return b
    return a if (a[0] > b[0] or (a[0] == b[0] and a[1] < b[1])) else b


def exhaustive_best(instance: ProblemInstance, limit: int = DEFAULT_LIMIT, workers: int = 1,
                    backend: str | None = None) -> OracleResult:
    """Evaluate all prod(m_i) assignments; refuse when that exceeds ``limit``."""
    require_valid(instance)
    size = instance.search_space
    if size > limit:
        raise SearchSpaceTooLarge(size, limit)
    cp = instance.compiled
    dims = tuple(int(m) for m in cp.pool_sizes)
    backend = backend or _kernels.default_backend()
    ranges = [(s, min(s + CHUNK, size)) for s in range(0, size, CHUNK)]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda r: _scan(cp, dims, r[0], r[1], backend), ranges))
    else:
        parts = [_scan(cp, dims, a, b, backend) for a, b in ranges]

    best = feas = None
    for b, f in parts:
        best = _better(best, b)
        feas = _better(feas, f)

    def individual(index: int) -> Individual:
        offsets = np.array(np.unravel_index(index, dims), dtype=np.int64)
        fit, u, c, v, t, _, _ = _kernels.evaluate(cp, offsets[None, :], backend)
        return Individual(cp.genes(offsets), float(u[0]), int(c[0]), int(v[0]), int(t[0]), float(fit[0]))

    best_ind = individual(best[1])
    return OracleResult(best_ind, best_ind.fitness,
                        individual(feas[1]) if feas else None, size)
