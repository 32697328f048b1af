"""Experiment suites comparing the reduced-pool GA with the full-pool baseline.

Protocol per test problem: one reduced-pool run with stagnation termination
fixes an evaluation budget; then both algorithms run ``runs`` times under
that budget. Run seeds derive from (suite seed, problem index, algorithm,
run index), so results do not depend on how runs are scheduled.
"""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..ga import MaxEvaluations, RunResult, Stagnation, config_for, run
from ..model import TP, ProblemInstance
from .generator import GeneratorSpec, generate_instance

ALGORITHM_CODES = {"gap2wss": 0, "pga": 1}
BUDGET_RUN = 2
CSV_COLUMNS = ("suite", "param_name", "param_value", "algorithm", "runs", "mean_fitness",
               "std_fitness", "mean_evals", "mean_ms")

# mean fitness (reduced, full) and improvement in percent reported for the
# original experiments; for qualitative comparison only
REFERENCE = {
    "tasks": (0.9122, 0.8900, 2.49),
    "candidates": (0.9161, 0.8820, 3.87),
    "qc": (0.7153, 0.6681, 7.06),
    "ic": (0.9153, 0.8822, 3.75),
    "tc": (0.7155, 0.6823, 4.87),
    "all": (0.8496, 0.8156, 4.17),
}


@dataclass(frozen=True)
class SuiteDef:
    param: str
    values: tuple
    n_tasks: int
    m_per_task: int


FULL_SUITES = {
    "tasks": SuiteDef("n_tasks", tuple(range(10, 101, 10)), 0, 500),
    "candidates": SuiteDef("m_per_task", tuple(range(100, 1001, 100)), 50, 0),
    "qc": SuiteDef("num_qc", tuple(range(10)), 50, 500),
    "ic": SuiteDef("num_ic", tuple(range(0, 5001, 500)), 50, 500),
    "tc": SuiteDef("num_tc", tuple(range(5)), 50, 500),
}
DESK_SUITES = {
    "tasks": SuiteDef("n_tasks", tuple(range(10, 101, 10)), 0, 200),
    "candidates": SuiteDef("m_per_task", tuple(range(20, 201, 20)), 50, 0),
    "qc": SuiteDef("num_qc", tuple(range(10)), 50, 200),
    "ic": SuiteDef("num_ic", tuple(range(0, 5001, 500)), 50, 200),
    "tc": SuiteDef("num_tc", tuple(range(5)), 50, 200),
}
SCALES = {"full": (FULL_SUITES, 30), "desk": (DESK_SUITES, 10)}


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass
class ProblemResult:
    suite: str
    param_name: str
    param_value: int
    budget: int
    results: dict = field(default_factory=dict)  # algorithm -> list of (RunResult, ms)

    def rows(self) -> list[dict]:
        out = []
        for algo, runs in self.results.items():
            fits = [r.best_fitness for r, _ in runs]
            out.append({
                "suite": self.suite,
                "param_name": self.param_name,
                "param_value": self.param_value,
                "algorithm": algo,
                "runs": len(runs),
                "mean_fitness": statistics.fmean(fits),
                "std_fitness": statistics.stdev(fits) if len(fits) > 1 else 0.0,
                "mean_evals": statistics.fmean(r.evaluations for r, _ in runs),
                "mean_ms": statistics.fmean(ms for _, ms in runs),
            })
        return out

    def mean(self, algorithm: str) -> float:
        return statistics.fmean(r.best_fitness for r, _ in self.results[algorithm])


def _timed(instance: ProblemInstance, config) -> tuple[RunResult, float]:
    t0 = time.perf_counter()
    res = run(instance, config)
    return res, (time.perf_counter() - t0) * 1e3


def run_problem(instance: ProblemInstance, runs: int, suite_seed: int, problem_index: int,
                suite: str = "", param_name: str = "", param_value: int = 0,
                workers: int = 1, stagnation: int = 15, **ga_kwargs) -> ProblemResult:
    budget_run = run(instance, config_for(
        "gap2wss", termination=Stagnation(stagnation),
        seed=derive_seed(suite_seed, problem_index, BUDGET_RUN, 0), **ga_kwargs))
    budget = budget_run.evaluations
    jobs = [
        (algo, config_for(algo, termination=MaxEvaluations(budget),
                          seed=derive_seed(suite_seed, problem_index, code, r), **ga_kwargs))
        for algo, code in ALGORITHM_CODES.items() for r in range(runs)
    ]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(lambda job: _timed(instance, job[1]), jobs))
    else:
        outcomes = [_timed(instance, cfg) for _, cfg in jobs]
    result = ProblemResult(suite, param_name, param_value, budget)
    for (algo, _), outcome in zip(jobs, outcomes):
        result.results.setdefault(algo, []).append(outcome)
    return result


def suite_specs(suite: str, scale: str = "desk", n_tasks: Optional[int] = None,
                m_per_task: Optional[int] = None, qws_path: Optional[str] = None,
                seed: int = 0, values: Optional[Iterable[int]] = None) -> list[GeneratorSpec]:
    """Generator specs for every test problem of a suite."""
    defs, _ = SCALES[scale]
    d = defs[suite]
    specs = []
    for idx, value in enumerate(values if values is not None else d.values):
        n = n_tasks or d.n_tasks
        m = m_per_task or d.m_per_task
        kw = dict(n_tasks=n, m_per_task=m, num_qc=0, num_ic=0, tc=frozenset())
        if d.param == "num_tc":
            rng = np.random.default_rng(derive_seed(seed, idx, 11))
            kw["tc"] = frozenset(TP(t) for t in rng.choice([t.value for t in TP], size=value, replace=False))
        else:
            kw[d.param] = value
        specs.append(GeneratorSpec(**kw, qws_path=qws_path, seed=derive_seed(seed, idx, 7)))
    return specs


def run_suite(suite: str, runs: Optional[int] = None, scale: str = "desk",
              n_tasks: Optional[int] = None, m_per_task: Optional[int] = None,
              qws_path: Optional[str] = None, seed: int = 0, workers: int = 1,
              values: Optional[Iterable[int]] = None, progress=None) -> list[ProblemResult]:
    runs = runs or SCALES[scale][1]
    param = SCALES[scale][0][suite].param
    out = []
    for idx, spec in enumerate(suite_specs(suite, scale, n_tasks, m_per_task, qws_path, seed, values)):
        value = len(spec.tc) if param == "num_tc" else getattr(spec, param)
        res = run_problem(generate_instance(spec), runs, seed, idx, suite, param, value, workers)
        out.append(res)
        if progress:
            progress(res)
    return out


def write_csv(results: Iterable[ProblemResult], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for row in res.rows():
            writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})


def improvement(results: list[ProblemResult]) -> float:
    """Percent change of the suite-wide mean fitness of the reduced GA over the baseline."""
    a = statistics.fmean(r.mean("gap2wss") for r in results)
    b = statistics.fmean(r.mean("pga") for r in results)
    return 100.0 * (a - b) / b


def convergence(instance: ProblemInstance, algorithm: str, runs: int = 30, iterations: int = 250,
                seed: int = 0) -> np.ndarray:
    """Best-so-far fitness per iteration for ``runs`` runs of fixed length, shape (runs, iterations+1)."""
    cfg = config_for(algorithm)
    budget = cfg.population_size + iterations * (cfg.n_offsprings + cfg.n_mutants)
    rows = [run(instance, config_for(algorithm, termination=MaxEvaluations(budget),
                                     seed=derive_seed(seed, r))).history for r in range(runs)]
    return np.array(rows)
