import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_instance
from pwss.aggregation import compute_bounds
from pwss.model import (
    TP,
    CandidateService,
    ConfigurationError,
    Direction,
    ICKind,
    InterserviceConstraint,
    ProblemInstance,
    QoSAttribute,
    profile,
)
from pwss.scoring import (
    ScoreCard,
    candidate_utility,
    composite_utility,
    global_rank,
    rank_task,
    reduce_pool,
    retained_count,
    score_and_rank,
    score_candidate,
    working_pools,
)
from pwss.workbench.generator import random_instance

RT_ATTR = QoSAttribute("response_time", Direction.NEGATIVE, profile("response_time"), 0.5)
TH_ATTR = QoSAttribute("throughput", Direction.POSITIVE, profile("throughput"), 0.5)


def utilities(inst):
    b = compute_bounds(inst)
    return [[candidate_utility(s, s.task, b, inst.attributes) for s in pool] for pool in inst.tasks]


def test_utility_extremes_single_negative_attribute():
    inst = make_instance([[("a", (100,), "c"), ("b", (200,), "c")]])
    assert utilities(inst) == [[1.0, 0.0]]


def test_candidate_best_on_every_attribute_has_unit_utility():
    inst = make_instance([[("a", (100, 9), "c"), ("b", (200, 3), "c"), ("c", (150, 5), "c")]],
                         attributes=(RT_ATTR, TH_ATTR))
    assert utilities(inst)[0][0] == 1.0


def test_half_utility_with_opposite_directions():
    # b is the max on both the positive and the negative attribute
    inst = make_instance([[("a", (100, 3), "c"), ("b", (200, 9), "c")]],
                         attributes=(RT_ATTR, TH_ATTR))
    assert utilities(inst)[0][1] == pytest.approx(0.5)


def test_degenerate_range_scores_one():
    inst = make_instance([[("a", (5,), "c"), ("b", (5,), "p")]])
    assert utilities(inst) == [[1.0, 1.0]]


def test_composite_utility_frozen(three_task):
    assert composite_utility(three_task, ["a", "d", "e"]) == pytest.approx(0.4633222540001546, abs=1e-12)


def test_composite_utility_best_everywhere_is_one():
    pools = [[("a", (100, 9), "c"), ("b", (200, 3), "c")],
             [("c", (10, 20), "c"), ("d", (40, 1), "c")]]
    price = QoSAttribute("price", Direction.NEGATIVE, profile("price"), 0.5)
    qty = QoSAttribute("volume", Direction.POSITIVE, profile("price"), 0.5)
    inst = make_instance(pools, attributes=(price, qty))
    assert composite_utility(inst, ["a", "c"]) == 1.0
    assert composite_utility(inst, ["b", "d"]) == 0.0


def test_ut_scores():
    inst = make_instance([[("a", (1,), "cr"), ("b", (2,), "c"), ("c", (3,), "r"), ("d", (4,), "p")]])
    assert [score_candidate(s, inst)[3] for s in inst.tasks[0]] == [3, 2, 2, 1]


def test_no_constraints_gives_zero_uc_uv():
    inst = random_instance(3, 4, np.random.default_rng(0))
    for pool in inst.tasks:
        for s in pool:
            _, uc, uv, _ = score_candidate(s, inst)
            assert (uc, uv) == (0, 0)


def test_uv_counts_mentions():
    pools = [[(f"a{j}", (j,), "c") for j in range(6)], [(f"b{j}", (j,), "c") for j in range(6)]]
    ics = [InterserviceConstraint(ICKind.DEPENDENCY, 1, "a0", 2, "b1"),
           InterserviceConstraint(ICKind.CONFLICT, 2, "b2", 1, "a0")]
    ics += [InterserviceConstraint(ICKind.CONFLICT, 1, f"a{j}", 2, f"b{j}") for j in range(1, 6)]
    ics += [InterserviceConstraint(ICKind.DEPENDENCY, 2, f"b{j}", 1, f"a{j - 1}") for j in range(4, 6)]
    ics += [InterserviceConstraint(ICKind.DEPENDENCY, 2, "b0", 1, "a5")]
    dc = tuple(c for c in ics if c.kind is ICKind.DEPENDENCY)
    cc = tuple(c for c in ics if c.kind is ICKind.CONFLICT)
    inst = make_instance(pools, dc=dc, cc=cc)
    assert len(dc) + len(cc) == 10
    a0 = inst.candidate(1, "a0")
    assert score_candidate(a0, inst)[2] == 8


def test_uc_uses_the_candidates_own_values():
    # bound of 150 on response time: a (100) passes, b (200) fails
    inst = make_instance([[("a", (100,), "c"), ("b", (200,), "c")]], qc=(150.0,))
    assert score_candidate(inst.candidate(1, "a"), inst)[1] == 1
    assert score_candidate(inst.candidate(1, "b"), inst)[1] == 0


def cards(us, uts=None):
    uts = uts or [1] * len(us)
    return [ScoreCard(f"s{i}", u, 0, 0, t) for i, (u, t) in enumerate(zip(us, uts))]


def test_rank_examples():
    ranked = rank_task(cards([0.9, 0.5, 0.7]))
    assert [c.RQ for c in ranked] == [1, 3, 2]
    ranked = rank_task(cards([0.1, 0.2, 0.3, 0.4], uts=[2, 2, 2, 2]))
    assert [c.RT for c in ranked] == [1, 2, 3, 4]
    assert [c.RQ for c in rank_task(cards([0.3]))] == [1]
    one = rank_task(cards([0.3]))[0]
    assert (one.RQ, one.RC, one.RV, one.RT) == (1, 1, 1, 1)


def test_rank_ties_break_by_id_not_position():
    cs = [ScoreCard("b", 0.5, 0, 0, 1), ScoreCard("a", 0.5, 0, 0, 1)]
    assert [c.RQ for c in rank_task(cs)] == [2, 1]


def test_global_rank_examples():
    card = ScoreCard("x", 0, 0, 0, 0, RQ=2, RC=1, RV=3, RT=4)
    assert global_rank(card, (4, 4, 4, 4), (1, 1, 1)) == 2.5
    best = ScoreCard("x", 0, 0, 0, 0, RQ=1, RC=1, RV=1, RT=1)
    assert global_rank(best, (7, 7, 7, 7), (1, 1, 1)) == pytest.approx(4 / 7)
    assert global_rank(card, (4, 4, 4, 4), (0, 0, 0)) == 0.5


@pytest.mark.parametrize("m,fraction,kept", [
    (10, 0.2, 2), (3, 0.2, 1), (100, 0.2, 20), (500, 0.2, 100), (7, 1.0, 7), (1, 0.1, 1), (11, 0.2, 3),
])
def test_retained_count(m, fraction, kept):
    assert retained_count(m, fraction) == kept


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
def test_retained_count_rejects_bad_fraction(fraction):
    with pytest.raises(ConfigurationError):
        retained_count(5, fraction)


def test_reduce_pool_keeps_smallest_global_rank():
    cs = [ScoreCard(f"s{i}", 0, 0, 0, 0, R=r) for i, r in enumerate([0.9, 0.1, 0.5, 0.3, 0.7])]
    assert [c.candidate for c in reduce_pool(cs, 0.4)] == ["s1", "s3"]


def test_working_pools_identity_at_full_fraction(tiny_constrained):
    pools = working_pools(tiny_constrained, 1.0)
    assert [p.tolist() for p in pools] == [list(range(len(t))) for t in tiny_constrained.tasks]


def test_working_pools_are_reduced(tiny_constrained):
    sizes = [len(p) for p in working_pools(tiny_constrained, 0.5)]
    assert sizes == [2, 2, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_utilities_in_unit_interval(n, m, seed):
    inst = random_instance(n, m, np.random.default_rng(seed), qc_prob=0.5, num_ic=2 if n > 1 else 0)
    for row in utilities(inst):
        assert all(-1e-12 <= u <= 1 + 1e-12 for u in row)
    rng = np.random.default_rng(seed + 1)
    genes = [pool[rng.integers(len(pool))].id for pool in inst.tasks]
    assert 0.0 <= composite_utility(inst, genes) <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(2, 10), st.integers(0, 2**32 - 1),
       st.floats(0.01, 100.0), st.floats(-50.0, 50.0), st.integers(0, 3))
def test_rq_invariant_under_positive_affine_rescale(n, m, seed, scale, shift, attr):
    inst = random_instance(n, m, np.random.default_rng(seed))
    tasks = tuple(
        tuple(CandidateService(s.id, s.task, tuple(v * scale + shift if r == attr else v
                                                   for r, v in enumerate(s.qos)), s.tp)
              for s in pool)
        for pool in inst.tasks)
    moved = ProblemInstance(tasks, inst.workflow, inst.attributes, inst.qc)
    before = [[c.RQ for c in pool] for pool in score_and_rank(inst)]
    after = [[c.RQ for c in pool] for pool in score_and_rank(moved)]
    assert before == after


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 12), st.integers(0, 2**32 - 1),
       st.sampled_from([0.1, 0.2, 0.5, 1.0]))
def test_reduction_law(n, m, seed, fraction):
    inst = random_instance(n, m, np.random.default_rng(seed), qc_prob=0.5,
                           num_ic=min(3, n * (n - 1) * m * m), random_tc=True)
    for pool in score_and_rank(inst):
        kept = reduce_pool(pool, fraction)
        assert len(kept) == max(1, int(np.ceil(round(fraction * m, 9))))
        best = min(pool, key=lambda c: (c.R, c.candidate))
        assert best in kept


def test_tp_score_covers_all_properties():
    inst = make_instance([[("a", (1,), tp.value)] for tp in TP])
    assert all(score_candidate(pool[0], inst)[3] in (1, 2, 3) for pool in inst.tasks)
