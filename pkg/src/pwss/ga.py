"""Genetic algorithm over (optionally reduced) candidate pools.

One iteration: rank-based parent selection and single-point crossover
produce the offsprings, rank-based selection over the offsprings and random
mutation produce the mutants, and an elitist rank-based draw over
population + offsprings + mutants forms the next population. With
``pareto_fraction=1.0`` this is the plain penalty-based GA baseline; the pool
reduction is the only difference between the two algorithms.

Internally individuals are rows of full-pool offsets; ids only appear at the
boundary (:class:`~pwss.model.Individual`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .fitness import Evaluator
from .model import ConfigurationError, Individual, ProblemInstance, require_valid
from .scoring import working_pools

IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class MaxEvaluations:
    budget: int


@dataclass(frozen=True)
class Stagnation:
    window: int = 15


Termination = Union[MaxEvaluations, Stagnation]


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 100
    crossover_rate: float = 0.90
    mutation_rate: float = 0.15
    pareto_fraction: float = 0.2
    termination: Termination = field(default_factory=Stagnation)
    seed: int = 0
    mutate_from: str = "offsprings"
    backend: Optional[str] = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigurationError("population size must be at least 2")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.pareto_fraction <= 1.0:
            raise ConfigurationError("pareto_fraction must lie in (0, 1]")
        if self.mutate_from not in ("offsprings", "population"):
            raise ConfigurationError("mutate_from must be 'offsprings' or 'population'")

    @property
    def n_offsprings(self) -> int:
        return 2 * math.ceil(round(self.crossover_rate * self.population_size / 2, 9))

    @property
    def n_mutants(self) -> int:
        return math.ceil(round(self.mutation_rate * self.population_size, 9))


ALGORITHMS = {"gap2wss": 0.2, "pga": 1.0}


def config_for(algorithm: str, **kwargs) -> GAConfig:
    try:
        fraction = ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}") from None
    return GAConfig(pareto_fraction=fraction, **kwargs)


@dataclass(frozen=True)
class RunResult:
    best: Individual
    best_fitness: float
    evaluations: int
    iterations: int
    history: tuple[float, ...]  # best fitness after initialisation and after each iteration
    seed: int


def rank_probabilities(fitness: np.ndarray) -> np.ndarray:
    """Selection probability of each member: (N - r + 1) / sum(r), rank 1 = fittest.

    Ties keep insertion order.
    """
    n = len(fitness)
    order = np.argsort(-np.asarray(fitness), kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return (n - ranks + 1) / ranks.sum()


def select_rank_based(fitness: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``count`` draws with replacement from the rank-based distribution."""
    if len(fitness) == 0:
        raise ValueError("cannot select from an empty group")
    return rng.choice(len(fitness), size=count, p=rank_probabilities(fitness))


def single_point(x: np.ndarray, y: np.ndarray, point: int) -> tuple[np.ndarray, np.ndarray]:
    """Children (x[:l] + y[l:], y[:l] + x[l:])."""
    return (np.concatenate([x[:point], y[point:]]), np.concatenate([y[:point], x[point:]]))


@dataclass
class WorkingPools:
    """Padded per-task working pools plus an offset -> position lookup."""

    table: np.ndarray  # (n, Lmax) offsets
    lengths: np.ndarray  # (n,)
    position: np.ndarray  # (n, mmax), -1 where the offset is not in the working pool

    @classmethod
    def build(cls, pools: list[np.ndarray], mmax: int) -> "WorkingPools":
        n = len(pools)
        lmax = max(len(p) for p in pools)
        table = np.zeros((n, lmax), dtype=np.int64)
        position = np.full((n, mmax), -1, dtype=np.int64)
        for i, p in enumerate(pools):
            table[i, : len(p)] = p
            position[i, p] = np.arange(len(p))
        return cls(table, np.array([len(p) for p in pools], dtype=np.int64), position)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        n = len(self.lengths)
        picks = np.empty((count, n), dtype=np.int64)
        for i in range(n):
            picks[:, i] = self.table[i, rng.integers(0, self.lengths[i], size=count)]
        return picks

    def contains(self, genes: np.ndarray) -> bool:
        cols = np.arange(genes.shape[1])
        return bool(np.all(self.position[cols, genes] >= 0))


def crossover_step(pop: np.ndarray, fit: np.ndarray, n_offsprings: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Offsprings from consecutive pairs of rank-selected parents; empty when n = 1."""
    n = pop.shape[1]
    if n < 2 or n_offsprings == 0:
        return np.empty((0, n), dtype=np.int64)
    idx = select_rank_based(fit, n_offsprings, rng)
    x = pop[idx[0::2]]
    y = pop[idx[1::2]]
    points = rng.integers(1, n, size=len(x))
    head = np.arange(n)[None, :] < points[:, None]
    children = np.empty((n_offsprings, n), dtype=np.int64)
    children[0::2] = np.where(head, x, y)
    children[1::2] = np.where(head, y, x)
    return children


def mutation_step(parents: np.ndarray, fit: np.ndarray, n_mutants: int, pools: WorkingPools,
                  rng: np.random.Generator) -> np.ndarray:
    """Mutants: one uniformly chosen gene replaced by a different member of its working pool."""
    n = parents.shape[1]
    idx = select_rank_based(fit, n_mutants, rng)
    mutants = parents[idx].copy()
    rows = np.arange(n_mutants)
    points = rng.integers(0, n, size=n_mutants)
    lengths = pools.lengths[points]
    pos = pools.position[points, mutants[rows, points]]
    draw = rng.integers(0, np.maximum(lengths - 1, 1))
    draw = np.where(draw >= pos, draw + 1, draw)
    movable = lengths > 1
    mutants[rows[movable], points[movable]] = pools.table[points[movable], draw[movable]]
    return mutants


def replacement_step(merged: np.ndarray, fit: np.ndarray, n_pop: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Elitist rank-based draw of the next population from the merged pool."""
    best = int(np.argsort(-fit, kind="stable")[0])
    idx = np.concatenate([[best], select_rank_based(fit, n_pop - 1, rng)])
    return merged[idx], fit[idx]


def run(instance: ProblemInstance, config: GAConfig) -> RunResult:
    require_valid(instance)
    cp = instance.compiled
    rng = np.random.default_rng(config.seed)
    pools = WorkingPools.build(working_pools(instance, config.pareto_fraction), int(cp.pool_sizes.max()))
    evaluate = Evaluator(instance, config.backend)

    n_pop = config.population_size
    n_c = config.n_offsprings if cp.n >= 2 else 0
    n_m = config.n_mutants
    per_iteration = n_c + n_m

    pop = pools.sample(n_pop, rng)
    fit = evaluate(pop)
    history = [float(fit.max())]
    iterations = 0
    stall = 0
    term = config.termination

    while True:
        if isinstance(term, MaxEvaluations):
            if per_iteration == 0 or evaluate.count + per_iteration > term.budget:
                break
        elif stall >= term.window:
            break

        offsprings = crossover_step(pop, fit, n_c, rng)
        f_off = evaluate(offsprings)
        if config.mutate_from == "offsprings" and len(offsprings):
            mutants = mutation_step(offsprings, f_off, n_m, pools, rng)
        else:
            mutants = mutation_step(pop, fit, n_m, pools, rng)
        f_mut = evaluate(mutants)

        merged = np.concatenate([pop, offsprings, mutants])
        pop, fit = replacement_step(merged, np.concatenate([fit, f_off, f_mut]), n_pop, rng)
        iterations += 1

        best = float(fit.max())
        stall = 0 if best > history[-1] + IMPROVEMENT_EPS else stall + 1
        history.append(max(best, history[-1]))

    best_row = pop[int(np.argmax(fit))]
    best = evaluate.individual(best_row)
    return RunResult(best, best.fitness, evaluate.count, iterations, tuple(history), config.seed)
