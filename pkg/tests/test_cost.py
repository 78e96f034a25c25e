"""Weighted mismatch costs against the brute-force posterior oracle."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deanon import (
    CommunityGraph,
    Matching,
    ModelParams,
    WeightTable,
    brute_force_posterior,
    enumerate_matchings,
    make_instance,
    map_equivalence_check,
    matching_cost,
    matching_count,
    mismatch_weights,
    posterior_score,
    union_graph,
    unit_weights,
)

LN13 = 2.5649493574615367  # ln((1 - 0.25*0.75) / (0.25*0.25))


def test_weight_closed_form_value():
    w = mismatch_weights(ModelParams.single(3, 0.25, 0.5))
    assert w.of(1, 1) == pytest.approx(LN13, rel=1e-15)
    assert w.of(1, 1) == pytest.approx(math.log(13), rel=1e-15)


def test_weights_positive_across_valid_grid():
    for p in (0.01, 0.1, 0.25, 0.4, 0.49):
        for s in (0.05, 0.3, 0.5, 0.8, 0.99):
            w = mismatch_weights(ModelParams.single(3, p, s))
            assert w.of(1, 1) > 0.0
            assert math.isfinite(w.of(1, 1))


def test_weights_decrease_in_p_and_blow_up_at_full_sampling():
    values = [mismatch_weights(ModelParams.single(3, p, 0.5)).of(1, 1)
              for p in (0.05, 0.15, 0.3, 0.45)]
    assert values == sorted(values, reverse=True)
    w = mismatch_weights(ModelParams.single(3, 0.3, 1.0))
    assert w.of(1, 1) == math.inf
    with pytest.raises(ValueError):
        mismatch_weights(ModelParams.single(3, 0.5, 0.5))


def test_weight_table_validation():
    with pytest.raises(ValueError):
        WeightTable(((1.0, 2.0), (2.5, 1.0)))
    with pytest.raises(ValueError):
        WeightTable(((0.0,),))
    assert unit_weights(2).of(1, 2) == 1.0


def test_matching_cost_hand_cases():
    g1 = CommunityGraph((1, 1, 1), frozenset({(0, 1)}))
    g2 = CommunityGraph((1, 1, 1), frozenset({(1, 2)}))
    w = unit_weights(1)
    ident = matching_cost(g1, g2, Matching.identity(3), w)
    assert ident.unweighted_total == 2
    assert ident.weighted_total == 2.0
    swap02 = matching_cost(g1, g2, Matching((2, 1, 0)), w)
    assert swap02.unweighted_total == 0
    assert swap02.weighted_total == 0.0
    assert ident.mismatch_count((1, 1)) == 2


def test_matching_cost_blocks_and_infinite_weights():
    g1 = CommunityGraph((1, 1, 2, 2), frozenset({(0, 1), (0, 2)}))
    g2 = CommunityGraph((1, 1, 2, 2), frozenset({(0, 1)}))
    w = WeightTable(((2.0, 3.0), (3.0, 5.0)))
    cost = matching_cost(g1, g2, Matching.identity(4), w)
    assert dict(cost.per_block_mismatch) == {(1, 1): 0, (1, 2): 1, (2, 2): 0}
    assert cost.weighted_total == 3.0
    inf_w = WeightTable(((math.inf, math.inf), (math.inf, math.inf)))
    assert matching_cost(g1, g2, Matching.identity(4), inf_w).weighted_total == math.inf
    # zero mismatches stay at zero cost even under infinite weights
    zero = matching_cost(g1, g1, Matching.identity(4), inf_w)
    assert zero.weighted_total == 0.0


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_cost_symmetry_under_inversion(seed):
    params = ModelParams.two_block(3, 3, 0.4, 0.2, 0.6)
    inst = make_instance(params, seed)
    m = inst.truth
    w = mismatch_weights(params)
    forward = matching_cost(inst.g1, inst.g2, m, w)
    backward = matching_cost(inst.g2, inst.g1, m.inverse(), w)
    assert forward.unweighted_total == backward.unweighted_total


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_union_graph_count_identity(seed):
    # per block: 2 * union edges = g1 edges + g2 edges + mismatches
    params = ModelParams.two_block(3, 4, 0.5, 0.25, 0.6)
    inst = make_instance(params, seed)
    pi = Matching((1, 0, 2, 4, 3, 5, 6))  # some wrong matching
    star = union_graph(inst.g1, inst.g2, pi)
    counts1 = inst.g1.per_block_edge_counts()
    counts2 = inst.g2.per_block_edge_counts()
    mism = dict(matching_cost(inst.g1, inst.g2, pi, unit_weights(2)).per_block_mismatch)
    for b, star_count in star.per_block_edge_counts().items():
        assert 2 * star_count == counts1[b] + counts2[b] + mism[b]


def test_posterior_score_single_pair_value():
    params = ModelParams.single(2, 0.2, 0.5)
    g = CommunityGraph((1, 1), frozenset({(0, 1)}))
    score = posterior_score(g, g, Matching.identity(2), params)
    assert score.log_score == pytest.approx(math.log(0.05 / 0.85), rel=1e-15)
    assert score.log_score == pytest.approx(-2.833213344056216, rel=1e-12)
    assert dict(score.per_block_union_edges) == {(1, 1): 1}
    empty = CommunityGraph((1, 1), frozenset())
    assert posterior_score(empty, empty, Matching.identity(2), params).log_score == 0.0


def test_posterior_score_is_affine_in_weighted_cost():
    params = ModelParams.two_block(3, 2, 0.35, 0.15, 0.55)
    inst = make_instance(params, 17)
    w = mismatch_weights(params)
    counts1 = inst.g1.per_block_edge_counts()
    counts2 = inst.g2.per_block_edge_counts()
    const = sum(
        w.of(*b) * (counts1[b] + counts2[b]) for b in counts1 if counts1[b] + counts2[b]
    )
    for pi in enumerate_matchings(params.community_layout()):
        cost = matching_cost(inst.g1, inst.g2, pi, w).weighted_total
        score = posterior_score(inst.g1, inst.g2, pi, params).log_score
        assert score == pytest.approx(-(cost + const) / 2.0, rel=1e-9, abs=1e-12)


def test_brute_force_posterior_two_node_values():
    params = ModelParams.single(2, 0.2, 0.5)
    both = CommunityGraph((1, 1), frozenset({(0, 1)}))
    empty = CommunityGraph((1, 1), frozenset())
    ident = Matching.identity(2)
    # edge observed in both samples: only g = {edge} survives:
    # 0.2 * 0.5 * 0.5
    assert brute_force_posterior(both, both, ident, params) == pytest.approx(0.05, rel=1e-12)
    # nothing observed: g = {} gives 0.8, g = {edge} gives 0.2 * 0.25
    assert brute_force_posterior(empty, empty, ident, params) == pytest.approx(0.85, rel=1e-12)
    # edge in g1 only: g = {edge} forced: 0.2 * 0.5 * 0.5
    assert brute_force_posterior(both, empty, ident, params) == pytest.approx(0.05, rel=1e-12)


def test_brute_force_posterior_rejects_large_instances():
    params = ModelParams.single(8, 0.2, 0.5)
    g = CommunityGraph(params.community_layout(), frozenset())
    with pytest.raises(ValueError):
        brute_force_posterior(g, g, Matching.identity(8), params)


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=15, deadline=None)
def test_posterior_ratio_matches_oracle(seed):
    # exp(score difference) must equal the oracle mass ratio
    params = ModelParams.two_block(2, 2, 0.3, 0.12, 0.6)
    inst = make_instance(params, seed)
    pis = list(enumerate_matchings(params.community_layout()))
    scores = [posterior_score(inst.g1, inst.g2, pi, params).log_score for pi in pis]
    masses = [brute_force_posterior(inst.g1, inst.g2, pi, params) for pi in pis]
    for i in range(len(pis)):
        for j in range(len(pis)):
            assert math.exp(scores[i] - scores[j]) == pytest.approx(
                masses[i] / masses[j], rel=1e-9
            )


def test_map_equivalence_on_seeded_instances():
    params = ModelParams.single(4, 0.3, 0.5)
    for seed in range(10):
        report = map_equivalence_check(make_instance(params, seed))
        assert report.agree
        assert report.matchings_checked == 24
        assert report.cost_argmin  # nonempty


def test_enumerate_matchings_order_and_budget():
    pis = list(enumerate_matchings((1, 1, 2)))
    assert len(pis) == 2
    forwards = [pi.forward for pi in pis]
    assert forwards == sorted(forwards)
    assert matching_count((3, 2)) == 12
    count = sum(1 for _ in enumerate_matchings((1, 1, 1, 2, 2)))
    assert count == 12
    with pytest.raises(ValueError):
        list(enumerate_matchings((1,) * 30, max_count=100))
    for pi in enumerate_matchings((1, 2, 1, 2)):
        assert pi.is_community_preserving((1, 2, 1, 2))
