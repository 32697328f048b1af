"""Candidate scoring, per-task ranking and top-fraction pool reduction.

Ranks are 1 = best. Ties anywhere are broken by ascending candidate id, so
every ranking is a permutation of 1..m for its task.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .aggregation import QoSBounds, aggregate_composite, compute_bounds
from .model import TP, CandidateService, ConfigurationError, ProblemInstance, QoSAttribute

TP_SCORE = {TP.CR: 3, TP.C: 2, TP.R: 2, TP.P: 1}


def _scaled(value: float, lo: float, hi: float, negative: bool) -> float:
    # a degenerate range makes every candidate equally (and fully) good
    span = hi - lo
    if not span > 0:
        return 1.0
    return (hi - value) / span if negative else (value - lo) / span


def candidate_utility(s: CandidateService, task: int, bounds: QoSBounds,
                      attrs: Sequence[QoSAttribute]) -> float:
    """Weighted min-max utility of one candidate within its own task pool."""
    lo = bounds.task_min[task - 1]
    hi = bounds.task_max[task - 1]
    return sum(a.weight * _scaled(v, lo[r], hi[r], a.negative)
               for r, (a, v) in enumerate(zip(attrs, s.qos)))


def composite_utility(instance: ProblemInstance, genes: Sequence[str],
                      bounds: QoSBounds | None = None) -> float:
    """Utility of an assignment against the composite bounds, clamped to [0, 1]."""
    bounds = bounds or compute_bounds(instance)
    q = aggregate_composite(instance, genes)
    u = 0.0
    for r, a in enumerate(instance.attributes):
        u = u + a.weight * _scaled(q[r], bounds.composite_min[r], bounds.composite_max[r], a.negative)
    return min(max(u, 0.0), 1.0)


@dataclass(frozen=True)
class ScoreCard:
    candidate: str
    U: float
    UC: int
    UV: int
    UT: int
    RQ: int = 0
    RC: int = 0
    RV: int = 0
    RT: int = 0
    R: float = math.nan


def _local_qc_violations(s: CandidateService, instance: ProblemInstance) -> int:
    count = 0
    for a, c, v in zip(instance.attributes, instance.qc, s.qos):
        if c is not None and ((a.negative and v > c) or (not a.negative and v < c)):
            count += 1
    return count


def _mentions(instance: ProblemInstance) -> Counter:
    counts: Counter = Counter()
    for ic in (*instance.dc, *instance.cc):
        counts[(ic.i, ic.p)] += 1
        counts[(ic.j, ic.q)] += 1
    return counts


def score_candidate(s: CandidateService, instance: ProblemInstance, bounds: QoSBounds | None = None,
                    mentions: Counter | None = None) -> tuple[float, int, int, int]:
    """(U, UC, UV, UT) for one candidate.

    UC counts the candidate's *own* values against the global bounds, since a
    single service has no composite value to check.
    """
    bounds = bounds or compute_bounds(instance)
    mentions = _mentions(instance) if mentions is None else mentions
    c_max = sum(c is not None for c in instance.qc)
    v_max = len(instance.dc) + len(instance.cc)
    u = candidate_utility(s, s.task, bounds, instance.attributes)
    uc = c_max - _local_qc_violations(s, instance)
    uv = v_max - mentions[(s.task, s.id)]
    return u, uc, uv, TP_SCORE[s.tp]


def _positions(cards: Sequence[ScoreCard], key) -> list[int]:
    order = sorted(range(len(cards)), key=lambda i: (-key(cards[i]), cards[i].candidate))
    ranks = [0] * len(cards)
    for pos, i in enumerate(order, start=1):
        ranks[i] = pos
    return ranks


def rank_task(cards: Sequence[ScoreCard]) -> list[ScoreCard]:
    """Fill RQ/RC/RV/RT; higher score ranks better, ties by id."""
    rq = _positions(cards, lambda c: c.U)
    rc = _positions(cards, lambda c: c.UC)
    rv = _positions(cards, lambda c: c.UV)
    rt = _positions(cards, lambda c: c.UT)
    return [replace(c, RQ=a, RC=b, RV=d, RT=e) for c, a, b, d, e in zip(cards, rq, rc, rv, rt)]


def global_rank(card: ScoreCard, maxima: tuple[int, int, int, int],
                flags: tuple[int, int, int]) -> float:
    """Sum of normalised ranks; the c/v/t flags switch off absent constraint families."""
    rq_max, rc_max, rv_max, rt_max = maxima
    c, v, t = flags
    return card.RQ / rq_max + c * card.RC / rc_max + v * card.RV / rv_max + t * card.RT / rt_max


def constraint_flags(instance: ProblemInstance) -> tuple[int, int, int]:
    return (int(any(c is not None for c in instance.qc)),
            int(bool(instance.dc or instance.cc)),
            int(bool(instance.tc)))


def score_and_rank(instance: ProblemInstance) -> list[list[ScoreCard]]:
    """Scored and ranked cards for every task, in pool order."""
    bounds = compute_bounds(instance)
    mentions = _mentions(instance)
    flags = constraint_flags(instance)
    out = []
    for pool in instance.tasks:
        cards = rank_task([ScoreCard(s.id, *score_candidate(s, instance, bounds, mentions))
                           for s in pool])
        maxima = (max(c.RQ for c in cards), max(c.RC for c in cards),
                  max(c.RV for c in cards), max(c.RT for c in cards))
        out.append([replace(c, R=global_rank(c, maxima, flags)) for c in cards])
    return out


def retained_count(m: int, fraction: float) -> int:
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"pool fraction must lie in (0, 1], got {fraction}")
    # rounding first keeps 0.2 * 10 from creeping past 2
    return max(1, math.ceil(round(fraction * m, 9)))


def reduce_pool(cards: Sequence[ScoreCard], fraction: float = 0.2) -> list[ScoreCard]:
    """The ``max(1, ceil(fraction * m))`` cards with the smallest global rank."""
    keep = retained_count(len(cards), fraction)
    return sorted(cards, key=lambda c: (c.R, c.candidate))[:keep]


def working_pools(instance: ProblemInstance, fraction: float) -> list[np.ndarray]:
    """Per-task arrays of full-pool offsets that the search may use."""
    cp = instance.compiled
    if fraction == 1.0:
        return [np.arange(m, dtype=np.int64) for m in cp.pool_sizes]
    pools = []
    for i, cards in enumerate(score_and_rank(instance)):
        kept = reduce_pool(cards, fraction)
        pools.append(np.array(sorted(cp.offset_of[i][c.candidate] for c in kept), dtype=np.int64))
    return pools
