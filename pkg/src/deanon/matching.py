"""Matching search: exact branch and bound plus a local-search baseline.

The exact search runs in two passes.  Pass A finds the optimal weighted
cost with an aggressive branch order (large communities first, high
degree nodes first, cheapest candidate first).  Pass B re-walks the
tree in forward-lexicographic order with the optimum as a fixed bound,
so the first leaf it completes is the lexicographically smallest
optimal matching and further leaves enumerate the remaining ties in
order.  Partial costs only grow as pairs become determined, which makes
pruning on the running total sound; costs are always evaluated as the
same canonical block-order dot product, so equal mismatch vectors
compare as bit-identical floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost import (
    CostBreakdown,
    WeightTable,
    matching_cost,
    matching_count,
    per_block_mismatches,
)
from .graphs import CommunityGraph
from .sampling import Matching, _random_matching_from_layout


@dataclass(frozen=True)
class MatchResult:
    best: Matching
    best_cost: CostBreakdown
    tie_set: tuple[Matching, ...]
    has_ties: bool | None
    ties_exhaustive: bool
    nodes_explored: int
    mode: str


@dataclass(frozen=True)
class SuccessReport:
    perfect: bool
    fraction_correct: float
    mismatch_counts: tuple[int, ...]


def score_success(
    estimate: Matching, truth: Matching, community_of: Sequence[int]
) -> SuccessReport:
    """Compare an estimated matching to the hidden one, per community."""
    if estimate.n != truth.n or estimate.n != len(community_of):
        raise ValueError("estimate, truth, and community layout sizes differ")
    k = max(community_of)
    wrong = [0] * k
    correct = 0
    for v, (a, b) in enumerate(zip(estimate.forward, truth.forward)):
        if a == b:
            correct += 1
        else:
            wrong[community_of[v] - 1] += 1
    n = estimate.n
    return SuccessReport(
        perfect=correct == n,
        fraction_correct=correct / n if n else 1.0,
        mismatch_counts=tuple(wrong),
    )


class _Search:
    """Shared state for one branch-and-bound pass."""

    __slots__ = (
        "n", "comm", "bits1", "bits2", "nblocks", "block_idx", "wflat",
        "order", "cand_pool", "explored",
    )

    def __init__(self, g1: CommunityGraph, g2: CommunityGraph, weights: WeightTable):
        self.n = g1.n
        self.comm = g1.community_of
        self.bits1 = g1.adjacency_bits
        self.bits2 = g2.adjacency_bits
        k = weights.k
        blocks = [(i, j) for i in range(1, k + 1) for j in range(i, k + 1)]
        self.nblocks = len(blocks)
        self.block_idx = {b: f for f, b in enumerate(blocks)}
        self.wflat = [weights.of(i, j) for i, j in blocks]
        # candidate g2 nodes per community, ascending label
        pools: dict[int, list[int]] = {}
        for v, c in enumerate(self.comm):
            pools.setdefault(c, []).append(v)
        self.cand_pool = pools
        self.explored = 0

    def dot(self, counts: list[int]) -> float:
        total = 0.0
        for w, c in zip(self.wflat, counts):
            if c:
                total += w * c
        return total

    def added_counts(
        self, counts: list[int], u: int, x: int, assigned: list[tuple[int, int]]
    ) -> list[int]:
        """Counts after assigning u -> x, given already assigned (node, image) pairs."""
        out = counts.copy()
        cu = self.comm[u]
        row1 = self.bits1[u]
        row2 = self.bits2[x]
        for v, y in assigned:
            e1 = (row1 >> v) & 1
            e2 = (row2 >> y) & 1
            if e1 != e2:
                out[self.block_idx[(cu, self.comm[v]) if cu <= self.comm[v] else (self.comm[v], cu)]] += 1
        return out


def _optimal_cost(search: _Search, order: list[int]) -> float:
    """Pass A: branch and bound for the minimum weighted cost."""
    n = search.n
    incumbent = math.inf
    used: set[int] = set()
    assigned: list[tuple[int, int]] = []

    def rec(depth: int, counts: list[int], partial: float):
        nonlocal incumbent
        if depth == n:
            if partial < incumbent:
                incumbent = partial
            return
        u = order[depth]
        scored = []
        for x in search.cand_pool[search.comm[u]]:
            if x in used:
                continue
            new_counts = search.added_counts(counts, u, x, assigned)
            new_partial = search.dot(new_counts)
            if new_partial > incumbent:
                continue
            scored.append((new_partial, x, new_counts))
        scored.sort(key=lambda t: (t[0], t[1]))
        for new_partial, x, new_counts in scored:
            if new_partial > incumbent:
                continue
            search.explored += 1
            used.add(x)
            assigned.append((u, x))
            rec(depth + 1, new_counts, new_partial)
            assigned.pop()
            used.remove(x)

    rec(0, [0] * search.nblocks, 0.0)
    return incumbent


class _EnoughLeaves(Exception):
    pass


def _collect_optima(search: _Search, bound: float, limit: int | None) -> list[tuple[int, ...]]:
    """Pass B: walk nodes 0..n-1 with candidates ascending, keep leaves at the bound.

    Every prefix of an optimal leaf has partial cost <= bound, so pruning
    strictly above the bound never discards an optimal leaf, and leaves
    complete in forward-lexicographic order.
    """
    n = search.n
    used: set[int] = set()
    assigned: list[tuple[int, int]] = []
    leaves: list[tuple[int, ...]] = []
    forward = [0] * n

    def rec(depth: int, counts: list[int], partial: float):
        if depth == n:
            leaves.append(tuple(forward))
            if limit is not None and len(leaves) >= limit:
                raise _EnoughLeaves
            return
        u = depth
        for x in search.cand_pool[search.comm[u]]:
            if x in used:
                continue
            new_counts = search.added_counts(counts, u, x, assigned)
            new_partial = search.dot(new_counts)
            if new_partial > bound:
                continue
            search.explored += 1
            used.add(x)
            assigned.append((u, x))
            forward[u] = x
            rec(depth + 1, new_counts, new_partial)
            assigned.pop()
            used.remove(x)

    try:
        rec(0, [0] * search.nblocks, 0.0)
    except _EnoughLeaves:
        pass
    return leaves


def exact_match(
    g1: CommunityGraph,
    g2: CommunityGraph,
    weights: WeightTable,
    *,
    ties: str = "full",
    max_matchings: int = 10**8,
) -> MatchResult:
    """Exact minimum-cost matching over all community-preserving bijections.

    ties controls how much of the optimal set is materialized:
      "full"    every optimal matching, in forward-lexicographic order
      "detect"  only the best matching, plus a flag for whether a second
                optimum exists
      "none"    only the best matching

    The reported best is always the lexicographically smallest optimal
    forward sequence, independent of the ties mode.  Raises if the
    matching space cardinality exceeds max_matchings.
    """
    if ties not in ("full", "detect", "none"):
        raise ValueError(f"unknown ties mode {ties!r}")
    if g1.community_of != g2.community_of:
        raise ValueError("graphs do not share a community layout")
    sizes = g1.community_sizes()
    space = matching_count(sizes)
    if space > max_matchings:
        raise ValueError(
            f"matching space has {space} elements, over the budget {max_matchings}"
        )

    search = _Search(g1, g2, weights)
    # large communities first, then high g1 degree, then label
    order = sorted(
        range(g1.n),
        key=lambda v: (-sizes[g1.community_of[v] - 1], -g1.degree(v), v),
    )
    best_cost_value = _optimal_cost(search, order)
    limit = {"full": None, "detect": 2, "none": 1}[ties]
    leaves = _collect_optima(search, best_cost_value, limit)

    best = Matching(leaves[0])
    breakdown = matching_cost(g1, g2, best, weights)
    assert breakdown.weighted_total == best_cost_value
    tie_set = tuple(Matching(f) for f in leaves) if ties == "full" else (best,)
    return MatchResult(
        best=best,
        best_cost=breakdown,
        tie_set=tie_set,
        has_ties=(len(leaves) > 1) if ties in ("full", "detect") else None,
        ties_exhaustive=ties == "full",
        nodes_explored=search.explored,
        mode="exact",
    )


def local_search_match(
    g1: CommunityGraph,
    g2: CommunityGraph,
    weights: WeightTable,
    *,
    restarts: int = 4,
    seed: int = 0,
    initial: Matching | None = None,
) -> MatchResult:
    """Steepest-descent over within-community transpositions, with random restarts.

    Each restart walks downhill until no single swap strictly lowers the
    weighted cost.  Restart 0 starts from `initial` when given; all other
    starts are uniform community-preserving matchings drawn from per-
    restart substreams of `seed`, so results are reproducible.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    if g1.community_of != g2.community_of:
        raise ValueError("graphs do not share a community layout")
    members: dict[int, list[int]] = {}
    for v, c in enumerate(g1.community_of):
        members.setdefault(c, []).append(v)
    swaps = [
        (a, b)
        for c in sorted(members)
        for idx, a in enumerate(members[c])
        for b in members[c][idx + 1 :]
    ]
    streams = np.random.SeedSequence(seed).spawn(restarts)
    evals = 0
    best: Matching | None = None
    best_value = math.inf

    for r in range(restarts):
        if r == 0 and initial is not None:
            cur = initial
        else:
            cur = _random_matching_from_layout(
                g1.community_of, np.random.default_rng(streams[r])
            )
        cur_value = matching_cost(g1, g2, cur, weights).weighted_total
        evals += 1
        improved = True
        while improved:
            improved = False
            move_value = cur_value
            move: tuple[int, int] | None = None
            fwd = list(cur.forward)
            for a, b in swaps:
                fwd[a], fwd[b] = fwd[b], fwd[a]
                value = matching_cost(g1, g2, Matching(tuple(fwd)), weights).weighted_total
                evals += 1
                fwd[a], fwd[b] = fwd[b], fwd[a]
                if value < move_value:
                    move_value = value
                    move = (a, b)
            if move is not None:
                a, b = move
                fwd[a], fwd[b] = fwd[b], fwd[a]
                cur = Matching(tuple(fwd))
                assert move_value < cur_value
                cur_value = move_value
                improved = True
        if cur_value < best_value:
            best_value = cur_value
            best = cur

    assert best is not None
    return MatchResult(
        best=best,
        best_cost=matching_cost(g1, g2, best, weights),
        tie_set=(best,),
        has_ties=None,
        ties_exhaustive=False,
        nodes_explored=evals,
        mode="local-search",
    )
