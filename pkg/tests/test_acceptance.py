"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from pwss import _kernels, io
from pwss.aggregation import compute_bounds, derive_tp
from pwss.fitness import FITNESS_TABLE, in_band, map_range
from pwss.ga import Stagnation, config_for, rank_probabilities, run, select_rank_based
from pwss.model import TP, CandidateService, DerivedTP, Loop, Parallel, ProblemInstance, Serial, Switch, TaskRef
from pwss.oracle import exhaustive_best
from pwss.scoring import candidate_utility, reduce_pool, score_and_rank
from pwss.workbench import suites
from pwss.workbench.generator import GeneratorSpec, generate_instance, random_instance

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")
    assert ok, detail


# -- 1 ----------------------------------------------------------------------

DERIVATION = {
    "p":  ("na na p p", "na", "na na na p", "p p p p"),
    "c":  ("p c p c", "c", "na c na c", "p c p c"),
    "r":  ("na na r r", "r", "na na r r", "p p r r"),
    "cr": ("p c r cr", "cr", "p c r cr", "p c r cr"),
}


def test_criterion_1_derivation_table():
    t0 = time.perf_counter()
    cells = mismatches = 0
    for row, (serial, loop, parallel, switch) in DERIVATION.items():
        cells += 1
        mismatches += derive_tp(Loop(TaskRef(1), 2), {1: TP(row)}) is not DerivedTP(loop)
        for node, expected in ((Serial, serial), (Parallel, parallel), (Switch, switch)):
            for col, want in zip(("p", "c", "r", "cr"), expected.split()):
                cells += 1
                got = derive_tp(node((TaskRef(1), TaskRef(2))), {1: TP(row), 2: TP(col)})
                mismatches += got is not DerivedTP(want)
    elapsed = time.perf_counter() - t0
    record(1, "derivation table conformance", cells == 52 and mismatches == 0 and elapsed < 1.0,
           f"{cells} cells, {mismatches} mismatches, {elapsed:.3f}s")


def max_ic(n: int, m: int) -> int:
    # number of distinct (i, p, j, q) tuples with i != j
    return n * (n - 1) * m * m


# -- 2 ----------------------------------------------------------------------

def test_criterion_2_fitness_table_and_bands():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for row in FITNESS_TABLE:
        for u, c, v in rng.random((100, 3)):
            worst = max(worst, abs(row.closed_form(u, c, v) - map_range(row.function(u, c, v), row.fr, row.cr)))

    checked = misplaced = 0
    while checked < 10_000:
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        inst = random_instance(n, m, rng, qc_prob=0.5, num_ic=min(int(rng.integers(0, 4)), max_ic(n, m)),
                               random_tc=True)
        cp = inst.compiled
        genes = np.stack([rng.integers(size, size=200) for size in cp.pool_sizes], axis=1)
        fit, _, c, v, t, _, _ = _kernels.evaluate(cp, genes)
        kinds = (c > 0).astype(int) + (v > 0) + (t > 0)
        misplaced += sum(not in_band(f, k) for f, k in zip(fit, kinds))
        checked += len(fit)
    elapsed = time.perf_counter() - t0
    record(2, "fitness table and band partition",
           worst <= 1e-12 and misplaced == 0 and elapsed < 10,
           f"max closed-form error {worst:.1e}, {misplaced}/{checked} misplaced, {elapsed:.1f}s")


# -- 3 ----------------------------------------------------------------------

def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    hits = exceed = 0
    for seed in range(50):
        inst = random_instance(3, 4, np.random.default_rng(10_000 + seed), qc_prob=0.5,
                               num_ic=3, random_tc=True)
        best = exhaustive_best(inst).best_fitness
        got = run(inst, config_for("pga", termination=Stagnation(15), seed=seed)).best_fitness
        hits += abs(got - best) <= 1e-9
        exceed += got > best + 1e-12
    elapsed = time.perf_counter() - t0
    record(3, "oracle equivalence", hits >= 45 and exceed == 0 and elapsed < 60,
           f"{hits}/50 optimal, {exceed} above oracle, {elapsed:.1f}s")


# -- 4 and 5 ----------------------------------------------------------------

@pytest.fixture(scope="module")
def desk_suite():
    t0 = time.perf_counter()
    results = []
    for idx in range(10):
        inst = generate_instance(GeneratorSpec(10, 100, seed=suites.derive_seed(4, idx)))
        results.append(suites.run_problem(inst, 10, 4, idx, "acceptance", "problem", idx))
    return results, time.perf_counter() - t0


def test_criterion_4_directional_improvement(desk_suite):
    results, elapsed = desk_suite
    wins = sum(r.mean("gap2wss") >= r.mean("pga") for r in results)
    gain = suites.improvement(results)
    ref = suites.REFERENCE["all"][2]
    record(4, "directional improvement", wins >= 8 and gain >= 0 and elapsed < 600,
           f"reduced GA >= baseline on {wins}/10, mean improvement {gain:+.2f}% "
           f"(published {ref:+.2f}%), {elapsed:.0f}s")


def test_criterion_5_budget_fairness(desk_suite):
    results, _ = desk_suite
    unfair = 0
    for res in results:
        used = {r.evaluations for runs in res.results.values() for r, _ in runs}
        rows = res.rows()
        unfair += used != {res.budget} or rows[0]["mean_evals"] != rows[1]["mean_evals"]
    record(5, "budget fairness", unfair == 0, f"{unfair} of {len(results)} problems with unequal budgets")


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_selection_distribution():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for n in (3, 10, 100):
        fit = rng.random(n)
        freq = np.bincount(select_rank_based(fit, 100_000, rng), minlength=n) / 100_000
        ranks = np.empty(n, dtype=int)
        ranks[np.argsort(-fit)] = np.arange(1, n + 1)
        expected = (n - ranks + 1) / ranks.sum()
        assert np.allclose(rank_probabilities(fit), expected)
        worst = max(worst, float(np.max(np.abs(freq - expected))))
    elapsed = time.perf_counter() - t0
    record(6, "selection distribution", worst <= 0.01 and elapsed < 10,
           f"max frequency error {worst:.4f}, {elapsed:.2f}s")


# -- 7 ----------------------------------------------------------------------

def rescaled(inst: ProblemInstance, attr: int, scale: float, shift: float) -> ProblemInstance:
    tasks = tuple(
        tuple(CandidateService(s.id, s.task, tuple(v * scale + shift if r == attr else v
                                                   for r, v in enumerate(s.qos)), s.tp)
              for s in pool)
        for pool in inst.tasks)
    return ProblemInstance(tasks, inst.workflow, inst.attributes, inst.qc, inst.dc, inst.cc, inst.tc)


def test_criterion_7_utility_bounds_and_scaling():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    out_of_range = candidates = assignments = changed = 0
    while candidates < 10_000 or assignments < 10_000:
        inst = random_instance(int(rng.integers(1, 6)), int(rng.integers(1, 20)), rng)
        b = compute_bounds(inst)
        for pool in inst.tasks:
            for s in pool:
                u = candidate_utility(s, s.task, b, inst.attributes)
                out_of_range += not 0.0 <= u <= 1.0
                candidates += 1
        cp = inst.compiled
        genes = np.stack([rng.integers(m, size=500) for m in cp.pool_sizes], axis=1)
        util = _kernels.evaluate(cp, genes)[1]
        out_of_range += int(np.count_nonzero((util < 0) | (util > 1)))
        assignments += len(util)

        attr = int(rng.integers(4))
        moved = rescaled(inst, attr, float(rng.uniform(0.01, 100)), float(rng.uniform(-100, 100)))
        before = [np.argsort([c.RQ for c in pool]).tolist() for pool in score_and_rank(inst)]
        after = [np.argsort([c.RQ for c in pool]).tolist() for pool in score_and_rank(moved)]
        changed += before != after
    elapsed = time.perf_counter() - t0
    record(7, "utility bounds and affine invariance", out_of_range == 0 and changed == 0 and elapsed < 10,
           f"{candidates} candidates, {assignments} assignments, {out_of_range} out of [0,1], "
           f"{changed} RQ orderings changed, {elapsed:.1f}s")


# -- 8 ----------------------------------------------------------------------

def test_criterion_8_pool_reduction_law():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    pools = bad_size = lost_best = 0
    while pools < 1000:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 30))
        inst = random_instance(n, m, rng, qc_prob=0.5, num_ic=min(int(rng.integers(0, 5)), max_ic(n, m)),
                               random_tc=True)
        for cards in score_and_rank(inst):
            for fraction in (0.1, 0.2, 0.5, 1.0):
                kept = reduce_pool(cards, fraction)
                bad_size += len(kept) != max(1, math.ceil(round(fraction * len(cards), 9)))
                best = min(c.R for c in cards)
                lost_best += all(c.R != best for c in kept)
            pools += 1
    elapsed = time.perf_counter() - t0
    record(8, "pool reduction law", bad_size == 0 and lost_best == 0 and elapsed < 5,
           f"{pools} pools, {bad_size} wrong sizes, {lost_best} minimizers lost, {elapsed:.1f}s")


# -- 9 ----------------------------------------------------------------------

def test_criterion_9_determinism():
    t0 = time.perf_counter()
    inst = generate_instance(GeneratorSpec(20, 50, num_qc=2, num_ic=40, tc=frozenset({TP.C, TP.CR}), seed=9))

    def solve(algo_seed):
        algo, seed = algo_seed
        res = run(inst, config_for(algo, termination=Stagnation(15), seed=seed))
        return json.dumps(io.solution_to_dict(inst, res), sort_keys=True)

    jobs = [(a, s) for a in ("gap2wss", "pga") for s in (1, 2)]
    sequential = [solve(j) for j in jobs]
    again = [solve(j) for j in jobs]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(solve, jobs))
    suite_1 = suites.run_suite("ic", runs=2, n_tasks=10, m_per_task=20, values=[50], seed=9, workers=1)
    suite_4 = suites.run_suite("ic", runs=2, n_tasks=10, m_per_task=20, values=[50], seed=9, workers=4)
    same_suite = all(
        [r for r, _ in a.results[k]] == [r for r, _ in b.results[k]]
        for a, b in zip(suite_1, suite_4) for k in a.results)
    elapsed = time.perf_counter() - t0
    ok = sequential == again == threaded and same_suite and elapsed < 60
    record(9, "determinism", ok,
           f"repeat identical {sequential == again}, threaded identical {sequential == threaded}, "
           f"suite across 1/4 workers identical {same_suite}, {elapsed:.1f}s")


if __name__ == "__main__":
    import sys
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
