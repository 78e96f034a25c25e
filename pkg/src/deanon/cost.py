"""Matching costs, posterior scores, and the brute-force posterior oracle.

The estimator ranks candidate matchings by a weighted mismatch count.
For a matching pi between g1's and g2's label spaces, a pair e of g1
is mismatched when e is an edge of g1 but pi(e) is not an edge of g2,
and symmetrically for edges of g2 pulled back through pi.  Each
mismatch in community pair (i, j) costs

    w_ij = ln( (1 - p_ij * s * (2 - s)) / (p_ij * (1 - s)^2) )

which is positive and finite for p_ij in (0, 1/2) and s < 1, and +inf
at s = 1.  Infinite weights follow extended-real arithmetic with the
convention inf * 0 = 0: a matching has finite cost at s = 1 exactly
when it produces zero mismatches.

The brute-force posterior below is the ground truth the cost ranking
is checked against: it enumerates, explicitly, every ground-truth
graph consistent with the observations under a matching and sums their
joint probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .graphs import Block, CommunityGraph, ModelParams, canonical_block, validate_params
from .sampling import DeanonInstance, Matching, _require_community_preserving


@dataclass(frozen=True)
class WeightTable:
    """Per-community-pair mismatch weights, symmetric k x k, entries in (0, +inf]."""

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "values", tuple(tuple(float(w) for w in row) for row in self.values)
        )
        k = len(self.values)
        for row in self.values:
            if len(row) != k:
                raise ValueError("weight table must be square")
        for a in range(k):
            for b in range(k):
                w = self.values[a][b]
                if not (w > 0.0):  # rejects nan too
                    raise ValueError(f"weight ({a + 1},{b + 1}) = {w} is not positive")
                if w != self.values[b][a]:
                    raise ValueError("weight table must be symmetric")

    @property
    def k(self) -> int:
        return len(self.values)

    def of(self, i: int, j: int) -> float:
        return self.values[i - 1][j - 1]

    @classmethod
    def uniform(cls, k: int, value: float = 1.0) -> "WeightTable":
        return cls(tuple(tuple(value for _ in range(k)) for _ in range(k)))


def mismatch_weights(params: ModelParams) -> WeightTable:
    """Weight table for the weighted mismatch cost.  Requires strict-regime params."""
    validate_params(params, mode="strict")
    s = params.sample_prob
    k = params.k
    rows = []
    for a in range(k):
        row = []
        for b in range(k):
            p = params.edge_prob[a][b]
            if s == 1.0:
                row.append(math.inf)
            else:
                row.append(math.log((1.0 - p * s * (2.0 - s)) / (p * (1.0 - s) ** 2)))
        rows.append(tuple(row))
    return WeightTable(tuple(rows))


def unit_weights(k: int) -> WeightTable:
    """All-ones table: weighted total degenerates to the plain mismatch count."""
    return WeightTable.uniform(k, 1.0)


def combine_weighted(per_block: dict[Block, int], weights: WeightTable) -> float:
    """Sum w_ij * count_ij in canonical block order, with inf * 0 = 0.

    Blocks with a zero count are skipped, so an infinite weight only
    surfaces when its block actually has mismatches.  Fixed iteration
    order keeps equal count vectors summing to bit-identical floats.
    """
    total = 0.0
    for i in range(1, weights.k + 1):
        for j in range(i, weights.k + 1):
            c = per_block.get((i, j), 0)
            if c:
                total += weights.of(i, j) * c
    return total


@dataclass(frozen=True)
class CostBreakdown:
    per_block_mismatch: tuple[tuple[Block, int], ...]
    weighted_total: float
    unweighted_total: int

    def mismatch_count(self, block: Block) -> int:
        for b, c in self.per_block_mismatch:
            if b == block:
                return c
        raise KeyError(block)


def _check_compatible(g1: CommunityGraph, g2: CommunityGraph, matching: Matching) -> None:
    if g1.community_of != g2.community_of:
        raise ValueError("graphs do not share a community layout")
    if matching.n != g1.n:
        raise ValueError(f"matching on {matching.n} nodes, graphs on {g1.n}")
    _require_community_preserving(matching, g1.community_of)


def per_block_mismatches(
    g1: CommunityGraph, g2: CommunityGraph, matching: Matching
) -> dict[Block, int]:
    """Mismatch counts by community pair: g1 edges whose image misses g2, plus
    g2 edges whose preimage misses g1."""
    _check_compatible(g1, g2, matching)
    k = max(g1.k, 1)
    counts: dict[Block, int] = {(i, j): 0 for i in range(1, k + 1) for j in range(i, k + 1)}
    fwd = matching.forward
    inv = matching.inverse().forward
    bits2 = g2.adjacency_bits
    bits1 = g1.adjacency_bits
    for u, v in g1.edges:
        a, b = fwd[u], fwd[v]
        if not (bits2[a] >> b) & 1:
            counts[g1.block_of(u, v)] += 1
    for x, y in g2.edges:
        a, b = inv[x], inv[y]
        if not (bits1[a] >> b) & 1:
            counts[g2.block_of(x, y)] += 1
    return counts


def matching_cost(
    g1: CommunityGraph, g2: CommunityGraph, matching: Matching, weights: WeightTable
) -> CostBreakdown:
    """Weighted and raw mismatch totals for one candidate matching."""
    counts = per_block_mismatches(g1, g2, matching)
    blocks = sorted(counts)
    return CostBreakdown(
        per_block_mismatch=tuple((b, counts[b]) for b in blocks),
        weighted_total=combine_weighted(counts, weights),
        unweighted_total=sum(counts.values()),
    )


def union_graph(g1: CommunityGraph, g2: CommunityGraph, matching: Matching) -> CommunityGraph:
    """Union of g1's edges with g2's edges pulled back into g1's label space."""
    _check_compatible(g1, g2, matching)
    inv = matching.inverse()
    pulled = frozenset(inv.apply_pair(x, y) for x, y in g2.edges)
    return CommunityGraph(g1.community_of, g1.edges | pulled)


@dataclass(frozen=True)
class PosteriorScore:
    log_score: float
    per_block_union_edges: tuple[tuple[Block, int], ...]


def posterior_score(
    g1: CommunityGraph, g2: CommunityGraph, matching: Matching, params: ModelParams
) -> PosteriorScore:
    """Log posterior of a matching, up to one additive constant shared by all matchings.

    log_score = sum over blocks of |E*_ij| * ln(p_ij (1-s)^2 / (1 - p_ij s (2-s)))

    where E*_ij counts union-graph edges in block (i, j).  Ranking by
    log_score descending is exactly ranking by weighted cost ascending:
    the two differ by an affine map with negative slope.  At s = 1 any
    nonempty union block sends the score to -inf.
    """
    validate_params(params, mode="strict")
    star = union_graph(g1, g2, matching)
    counts = star.per_block_edge_counts()
    s = params.sample_prob
    total = 0.0
    for block in sorted(counts):
        c = counts[block]
        if not c:
            continue
        p = params.prob(*block)
        if s == 1.0:
            total = -math.inf
            break
        total += c * math.log(p * (1.0 - s) ** 2 / (1.0 - p * s * (2.0 - s)))
    blocks = sorted(counts)
    return PosteriorScore(
        log_score=total,
        per_block_union_edges=tuple((b, counts[b]) for b in blocks),
    )


def brute_force_posterior(
    g1: CommunityGraph, g2: CommunityGraph, matching: Matching, params: ModelParams
) -> float:
    """Unnormalized posterior mass of a matching by explicit enumeration.

    Sums Pr[g] * Pr[g1 | g] * Pr[g2 | g, matching] over every candidate
    ground-truth graph g, where g runs over all supersets of the union
    graph (any g missing an observed edge has zero likelihood).  Each
    remaining free pair contributes p * (1-s)^2 when present in g and
    (1 - p) when absent; observed pairs contribute fixed factors.  Cost
    is 2^(free pairs); callers keep n(n-1)/2 <= 20.
    """
    validate_params(params, mode="generation-only")
    _check_compatible(g1, g2, matching)
    n = g1.n
    total_pairs = n * (n - 1) // 2
    if total_pairs > 20:
        raise ValueError(f"{total_pairs} node pairs is past the enumeration budget (20)")
    s = params.sample_prob
    inv = matching.inverse()
    pulled = frozenset(inv.apply_pair(x, y) for x, y in g2.edges)

    fixed = 1.0
    free_present: list[float] = []
    free_absent: list[float] = []
    for u in range(n):
        for v in range(u + 1, n):
            p = params.prob(*g1.block_of(u, v))
            in1 = g1.has_edge(u, v)
            in2 = (u, v) in pulled
            if in1 or in2:
                # pair observed at least once: g must contain it
                f = p
                f *= s if in1 else (1.0 - s)
                f *= s if in2 else (1.0 - s)
                fixed *= f
            else:
                free_present.append(p * (1.0 - s) ** 2)
                free_absent.append(1.0 - p)

    f = len(free_present)
    if f == 0:
        return fixed
    # one row per subset of the free pairs: bit b of the subset index
    # decides whether free pair b is present in the candidate g
    idx = np.arange(1 << f, dtype=np.uint32)
    masses = np.full(1 << f, fixed, dtype=np.float64)
    present = np.asarray(free_present)
    absent = np.asarray(free_absent)
    for b in range(f):
        chosen = (idx >> b) & 1
        masses *= np.where(chosen, present[b], absent[b])
    return float(masses.sum())


def enumerate_matchings(community_of: Sequence[int], max_count: int | None = None):
    """Yield every community-preserving matching, lexicographic by forward sequence.

    Node labels may be assigned to communities in any order; each
    community's members are permuted independently.
    """
    members: dict[int, list[int]] = {}
    for v, c in enumerate(community_of):
        members.setdefault(c, []).append(v)
    groups = [members[c] for c in sorted(members)]
    if max_count is not None:
        total = matching_count([len(g) for g in groups])
        if total > max_count:
            raise ValueError(f"{total} matchings exceeds the enumeration budget {max_count}")

    def rec(gi: int, forward: list[int]):
        if gi == len(groups):
            yield Matching(tuple(forward))
            return
        nodes = groups[gi]
        for perm in permutations(nodes):
            for src, dst in zip(nodes, perm):
                forward[src] = dst
            yield from rec(gi + 1, forward)

    yield from rec(0, [0] * len(community_of))


def matching_count(sizes: Iterable[int]) -> int:
    total = 1
    for sz in sizes:
        total *= math.factorial(sz)
    return total


@dataclass(frozen=True)
class MapEquivalenceReport:
    """Side-by-side argmin/argmax over all matchings of one instance."""

    cost_argmin: tuple[tuple[int, ...], ...]
    posterior_argmax: tuple[tuple[int, ...], ...]
    agree: bool
    matchings_checked: int


def _close_set(keys: list[tuple[int, ...]], values: list[float], pick_max: bool, rel_tol: float):
    best = max(values) if pick_max else min(values)
    out = []
    for key, val in zip(keys, values):
        if val == best or math.isclose(val, best, rel_tol=rel_tol, abs_tol=0.0):
            out.append(key)
    return tuple(sorted(out))


def map_equivalence_check(
    instance: DeanonInstance, rel_tol: float = 1e-9
) -> MapEquivalenceReport:
    """Check that minimizing weighted cost selects exactly the matchings of
    maximal brute-force posterior mass.

    Enumerates every community-preserving matching, so only sensible on
    tiny instances.  Ties on either side are resolved with a relative
    tolerance; exact ties produce bit-identical values by construction.
    """
    params = instance.params
    weights = mismatch_weights(params)
    keys: list[tuple[int, ...]] = []
    costs: list[float] = []
    masses: list[float] = []
    for pi in enumerate_matchings(params.community_layout(), max_count=10**6):
        keys.append(pi.forward)
        costs.append(matching_cost(instance.g1, instance.g2, pi, weights).weighted_total)
        masses.append(brute_force_posterior(instance.g1, instance.g2, pi, params))
    cost_set = _close_set(keys, costs, pick_max=False, rel_tol=rel_tol)
    mass_set = _close_set(keys, masses, pick_max=True, rel_tol=rel_tol)
    return MapEquivalenceReport(
        cost_argmin=cost_set,
        posterior_argmax=mass_set,
        agree=cost_set == mass_set,
        matchings_checked=len(keys),
    )
