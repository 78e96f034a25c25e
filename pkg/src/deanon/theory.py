"""Analysis toolbox: mismatch combinatorics, tail bounds, and threshold reports.

These functions quantify when the minimum-cost matching should recover
the hidden one.  The route runs: classify the node pairs a wrong
matching disturbs (mismatch_pair_sets), split them into three groups
that are internally independent under the matching action
(partition_pairs), bound each group's score fluctuation with a
Chernoff bound on a lazy random walk (chernoff_tail_bound), and
aggregate over all wrong matchings into a union bound
(union_bound_table) whose decay condition is the recovery threshold
(threshold_report).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .cost import enumerate_matchings
from .graphs import CommunityGraph, ModelParams
from .sampling import Matching

# 99% two-sided normal quantile, for empirical_tail confidence half-widths
_Z99 = 2.5758293035489004


def _layout_of(arg) -> tuple[int, ...]:
    if isinstance(arg, ModelParams):
        return arg.community_layout()
    return tuple(int(c) for c in arg)


@dataclass(frozen=True)
class MismatchPairs:
    """Node pairs disturbed by a matching, split by community geometry.

    intra and inter hold pairs (as rows of an (m, 2) array) whose image
    under the matching is a different pair, within one community and
    across two communities respectively.  transpositions holds the
    pairs the matching swaps onto themselves; they are disturbed at the
    node level but fixed as a pair, so they belong to neither set.
    """

    intra: np.ndarray
    inter: np.ndarray
    transpositions: np.ndarray

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.intra), len(self.inter), len(self.transpositions))


def _pairs_array(rows: Iterable[tuple[int, int]] | np.ndarray) -> np.ndarray:
    arr = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be (u, v) rows")
    return arr


def mismatch_pair_sets(matching: Matching, communities) -> MismatchPairs:
    """Enumerate the disturbed pairs of a community-preserving matching.

    communities may be a ModelParams or a node -> community sequence.
    The enumeration is cross-checked against closed-form counts: with
    m_i mismatched nodes in community i of size n_i,

      |intra| = sum_i [ C(m_i, 2) + m_i (n_i - m_i) ] - |transpositions|
      |inter| = sum_{i<j} [ m_i n_j + m_j n_i - m_i m_j ]
    """
    community_of = _layout_of(communities)
    n = matching.n
    if len(community_of) != n:
        raise ValueError("community layout size differs from matching size")
    f = np.asarray(matching.forward, dtype=np.int64)
    iu, iv = np.triu_indices(n, k=1)
    pu, pv = f[iu], f[iv]
    lo, hi = np.minimum(pu, pv), np.maximum(pu, pv)
    moved = (lo != iu) | (hi != iv)
    comm = np.asarray(community_of, dtype=np.int64)
    same = comm[iu] == comm[iv]
    intra_mask = moved & same
    inter_mask = moved & ~same
    trans_mask = (pu == iv) & (pv == iu)

    intra = np.stack([iu[intra_mask], iv[intra_mask]], axis=1)
    inter = np.stack([iu[inter_mask], iv[inter_mask]], axis=1)
    trans = np.stack([iu[trans_mask], iv[trans_mask]], axis=1)

    # closed-form cross-check
    mism = f != np.arange(n)
    k = int(comm.max()) if n else 0
    m_of = np.zeros(k + 1, dtype=np.int64)
    n_of = np.zeros(k + 1, dtype=np.int64)
    for c in range(1, k + 1):
        in_c = comm == c
        n_of[c] = in_c.sum()
        m_of[c] = mism[in_c].sum()
    exp_intra = int(
        sum(m_of[c] * (m_of[c] - 1) // 2 + m_of[c] * (n_of[c] - m_of[c]) for c in range(1, k + 1))
    ) - len(trans)
    exp_inter = int(
        sum(
            m_of[c] * n_of[d] + m_of[d] * n_of[c] - m_of[c] * m_of[d]
            for c in range(1, k + 1)
            for d in range(c + 1, k + 1)
        )
    )
    if len(intra) != exp_intra or len(inter) != exp_inter:
        raise AssertionError(
            f"mismatch set sizes {len(intra)},{len(inter)} disagree with "
            f"closed forms {exp_intra},{exp_inter}"
        )
    if 2 * len(trans) > int(mism.sum()):
        raise AssertionError("more transpositions than mismatched node pairs allow")
    return MismatchPairs(intra=intra, inter=inter, transpositions=trans)


@dataclass(frozen=True)
class PairPartition:
    """Three groups of pairs, each internally closed against the matching action."""

    parts: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return tuple(len(p) for p in self.parts)  # type: ignore[return-value]


def partition_pairs(matching: Matching, pairs) -> PairPartition:
    """Split pairs into 3 groups so no group contains both e and matching(e),
    each group holding at least floor(|pairs| / 3) members.

    The matching acts on the pair set as a partial successor map
    (injective, so components are chains and cycles).  Each component
    gets a balanced proper 3-coloring, and the color classes are dealt
    to the globally smallest groups first, which keeps the three group
    sizes within one of each other throughout.

    Pairs fixed by the matching (transpositions included) cannot be
    separated from their own image and are rejected.
    """
    n = matching.n
    arr = _pairs_array(pairs)
    if len(arr) and not (arr[:, 0] < arr[:, 1]).all():
        raise ValueError("pairs must be canonical (u < v)")
    m = len(arr)
    if m == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return PairPartition(parts=(empty, empty.copy(), empty.copy()))

    codes = arr[:, 0] * n + arr[:, 1]
    order = np.argsort(codes)
    arr = arr[order]
    codes = codes[order]
    if len(np.unique(codes)) != m:
        raise ValueError("duplicate pairs")

    f = np.asarray(matching.forward, dtype=np.int64)
    pu, pv = f[arr[:, 0]], f[arr[:, 1]]
    lo, hi = np.minimum(pu, pv), np.maximum(pu, pv)
    img_codes = lo * n + hi
    if (img_codes == codes).any():
        bad = int(np.flatnonzero(img_codes == codes)[0])
        raise ValueError(
            f"pair {tuple(arr[bad])} is fixed by the matching and cannot be partitioned"
        )

    pos = np.searchsorted(codes, img_codes)
    pos = np.clip(pos, 0, m - 1)
    succ = np.where(codes[pos] == img_codes, pos, -1)
    pred = np.full(m, -1, dtype=np.int64)
    has_succ = succ >= 0
    pred[succ[has_succ]] = np.flatnonzero(has_succ)

    visited = np.zeros(m, dtype=bool)
    components: list[tuple[list[int], bool]] = []  # (chain order, is_cycle)
    succ_list = succ.tolist()
    pred_list = pred.tolist()
    for start in range(m):
        if pred_list[start] == -1 and not visited[start]:
            chain = []
            cur = start
            while cur != -1 and not visited[cur]:
                visited[cur] = True
                chain.append(cur)
                cur = succ_list[cur]
            components.append((chain, False))
    for start in range(m):
        if not visited[start]:
            chain = []
            cur = start
            while not visited[cur]:
                visited[cur] = True
                chain.append(cur)
                cur = succ_list[cur]
            components.append((chain, True))

    group_sizes = [0, 0, 0]
    group_members: list[list[int]] = [[], [], []]
    for chain, is_cycle in components:
        mc = len(chain)
        if is_cycle:
            r = mc % 3
            if r == 0:
                colors = [i % 3 for i in range(mc)]
            elif r == 1:
                # one walk position recolored to its predecessor's middle color
                colors = [i % 3 for i in range(mc - 1)] + [1]
            else:
                colors = [i % 3 for i in range(mc - 2)] + [0, 1]
        else:
            colors = [i % 3 for i in range(mc)]
        classes: list[list[int]] = [[], [], []]
        for idx, color in zip(chain, colors):
            classes[color].append(idx)
        by_size = sorted(range(3), key=lambda c: (-len(classes[c]), c))
        targets = sorted(range(3), key=lambda gidx: (group_sizes[gidx], gidx))
        for cls, tgt in zip(by_size, targets):
            group_members[tgt].extend(classes[cls])
            group_sizes[tgt] += len(classes[cls])

    parts = tuple(
        arr[np.sort(np.asarray(idxs, dtype=np.int64))] if idxs else np.zeros((0, 2), dtype=np.int64)
        for idxs in group_members
    )
    return PairPartition(parts=parts)  # type: ignore[arg-type]


@dataclass(frozen=True)
class StepProbs:
    """Distribution of one disturbed pair's contribution to the score gap.

    A disturbed pair shifts the mismatch difference between the true and
    the wrong matching by +1, 0, or -1.  Within a community the step is
    +1 with probability p*s*(1-s) and -1 with probability
    p*s*(s + 1 - 2*p*s); across communities the same forms hold with q.
    """

    intra_up: float
    intra_stay: float
    intra_down: float
    inter_up: float
    inter_stay: float
    inter_down: float

    def __post_init__(self):
        for name in ("intra", "inter"):
            up = getattr(self, f"{name}_up")
            stay = getattr(self, f"{name}_stay")
            down = getattr(self, f"{name}_down")
            if min(up, stay, down) < -1e-15 or not math.isclose(
                up + stay + down, 1.0, rel_tol=0.0, abs_tol=1e-12
            ):
                raise ValueError(f"{name} step probabilities do not form a distribution")


def score_step_probs(p: float, q: float, s: float) -> StepProbs:
    for name, val in (("p", p), ("q", q)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} = {val} outside [0, 1]")
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s = {s} outside (0, 1]")
    iu = p * s * (1.0 - s)
    idn = p * s * (s + 1.0 - 2.0 * p * s)
    xu = q * s * (1.0 - s)
    xdn = q * s * (s + 1.0 - 2.0 * q * s)
    return StepProbs(
        intra_up=iu,
        intra_stay=1.0 - iu - idn,
        intra_down=idn,
        inter_up=xu,
        inter_stay=1.0 - xu - xdn,
        inter_down=xdn,
    )


def chernoff_tail_bound(n_intra: int, n_inter: int, probs: StepProbs) -> float:
    """Upper bound on the probability that a sum of independent steps is >= 0.

    With a = n_intra * up_intra + n_inter * up_inter (mean upward mass)
    and b the same with the downward probabilities, the optimized
    exponential moment bound is exp(-(sqrt(b) - sqrt(a))^2), capped at 1
    and valid only when the downward mass dominates.
    """
    if n_intra < 0 or n_inter < 0:
        raise ValueError("pair counts must be nonnegative")
    a = n_intra * probs.intra_up + n_inter * probs.inter_up
    b = n_intra * probs.intra_down + n_inter * probs.inter_down
    if b <= a:
        return 1.0
    return min(1.0, math.exp(-((math.sqrt(b) - math.sqrt(a)) ** 2)))


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    half_width: float
    trials: int


def empirical_tail(
    n_intra: int, n_inter: int, probs: StepProbs, trials: int, seed
) -> TailEstimate:
    """Monte Carlo estimate of Pr[sum of steps >= 0] with a 99% half-width.

    Each trial draws the (up, stay, down) counts of the n_intra and
    n_inter steps from multinomials, which is distributed identically to
    summing the steps one by one.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    z = np.zeros(trials, dtype=np.int64)
    if n_intra:
        c = rng.multinomial(n_intra, [probs.intra_up, probs.intra_stay, probs.intra_down], size=trials)
        z += c[:, 0] - c[:, 2]
    if n_inter:
        c = rng.multinomial(n_inter, [probs.inter_up, probs.inter_stay, probs.inter_down], size=trials)
        z += c[:, 0] - c[:, 2]
    est = float((z >= 0).mean())
    half = _Z99 * math.sqrt(est * (1.0 - est) / trials)
    return TailEstimate(estimate=est, half_width=half, trials=trials)


def _signal(s: float) -> float:
    """Shared threshold factor s * (1 - sqrt(1 - s^2)), increasing on (0, 1]."""
    return s * (1.0 - math.sqrt(max(0.0, 1.0 - s * s)))


def _two_block_rates(params: ModelParams) -> tuple[float, float]:
    if params.k == 1:
        return params.prob(1, 1), 0.0
    if params.k != 2:
        raise ValueError("threshold analysis covers one or two communities")
    p = params.prob(1, 1)
    if params.prob(2, 2) != p:
        raise ValueError("threshold analysis needs equal within-community probabilities")
    return p, params.prob(1, 2)


@dataclass(frozen=True)
class UnionBoundTable:
    """Expected count of wrong matchings at least as attractive as the truth,
    bounded cell by cell over per-community mismatch counts."""

    slope1: float
    slope2: float
    log_terms: np.ndarray
    log_total: float
    total: float
    total_below_one: bool
    decaying: bool


def union_bound_table(params: ModelParams) -> UnionBoundTable:
    """Union bound over wrong matchings, indexed by per-community mismatch counts.

    The cell with m_i mismatched nodes in community i contributes
    exp(m_1 * slope_1 + m_2 * slope_2), where

      slope_i = ln(n_i) - s(1 - sqrt(1 - s^2)) (n_i p + n_other q) / 3

    and the total is 3 times the sum over all nonzero cells, computed in
    log space.  Negative slopes mean the bound decays geometrically in
    the mismatch counts.
    """
    p, q = _two_block_rates(params)
    s = params.sample_prob
    sig = _signal(s)
    if params.k == 1:
        n1 = n2 = params.sizes[0]
    else:
        n1, n2 = params.sizes
    a1 = math.log(n1) - sig * (n1 * p + n2 * q) / 3.0
    a2 = math.log(n2) - sig * (n2 * p + n1 * q) / 3.0

    k1 = np.arange(n1 + 1, dtype=np.float64)
    k2 = np.arange(n2 + 1, dtype=np.float64)
    log_terms = k1[:, None] * a1 + k2[None, :] * a2
    log_terms[0, 0] = -np.inf
    if params.k == 1:
        # single community: only the m2 = 0 column exists
        log_terms[:, 1:] = -np.inf
        log_sum = float(logsumexp(k1[1:] * a1))
    else:
        lg1 = float(logsumexp(k1 * a1))
        lg2 = float(logsumexp(k2 * a2))
        full = lg1 + lg2
        # subtract the (0, 0) cell's unit contribution
        log_sum = full + math.log1p(-math.exp(-full)) if full > 0 else -math.inf
    log_total = math.log(3.0) + log_sum
    total = math.exp(log_total) if log_total < 700 else math.inf
    return UnionBoundTable(
        slope1=a1,
        slope2=a2,
        log_terms=log_terms,
        log_total=log_total,
        total=total,
        total_below_one=log_total < 0.0,
        decaying=a1 < 0.0 and a2 < 0.0,
    )


@dataclass(frozen=True)
class CommunityThreshold:
    community: int
    size: int
    other_size: int
    rhs: float
    lhs_factor1: float
    slack_factor1: float
    satisfied_factor1: bool
    lhs_factor2: float
    slack_factor2: float
    satisfied_factor2: bool


@dataclass(frozen=True)
class ThresholdReport:
    """Per-community recovery condition at two strengths of the cross term.

    Community i is safely recoverable when

      s(1 - sqrt(1 - s^2)) * (p + factor * (n_other / n_i) * q)  >  3 ln(n_i) / n_i

    reported with the cross-community factor at 2 (the stated
    sufficient condition) and at 1 (the sharper constant the union
    bound itself supports).  With q = 0 and equal sizes both collapse
    to p * s(1 - sqrt(1 - s^2)) > 3 ln(n) / n.
    """

    k: int
    p: float
    q: float
    s: float
    signal: float
    q_exceeds_p: bool
    reduced_form: bool
    communities: tuple[CommunityThreshold, ...]


def threshold_report(params: ModelParams) -> ThresholdReport:
    p, q = _two_block_rates(params)
    s = params.sample_prob
    sig = _signal(s)
    if params.k == 1:
        sizes = [(1, params.sizes[0], 0)]
    else:
        sizes = [(1, params.sizes[0], params.sizes[1]), (2, params.sizes[1], params.sizes[0])]
    rows = []
    for community, n_this, n_other in sizes:
        rhs = 3.0 * math.log(n_this) / n_this
        ratio = (n_other / n_this) * q
        lhs1 = sig * (p + 1.0 * ratio)
        lhs2 = sig * (p + 2.0 * ratio)
        rows.append(
            CommunityThreshold(
                community=community,
                size=n_this,
                other_size=n_other,
                rhs=rhs,
                lhs_factor1=lhs1,
                slack_factor1=lhs1 - rhs,
                satisfied_factor1=lhs1 > rhs,
                lhs_factor2=lhs2,
                slack_factor2=lhs2 - rhs,
                satisfied_factor2=lhs2 > rhs,
            )
        )
    reduced = params.k == 1 or (q == 0.0 and params.sizes[0] == params.sizes[1])
    return ThresholdReport(
        k=params.k,
        p=p,
        q=q,
        s=s,
        signal=sig,
        q_exceeds_p=q > p,
        reduced_form=reduced,
        communities=tuple(rows),
    )


def find_automorphisms(g: CommunityGraph, max_matchings: int = 10**8) -> list[Matching]:
    """All community-preserving permutations mapping the edge set onto itself,
    in forward-lexicographic order.  Always contains the identity."""
    autos = []
    edges = g.edges
    for sigma in enumerate_matchings(g.community_of, max_count=max_matchings):
        mapped = frozenset(sigma.apply_pair(u, v) for u, v in edges)
        if mapped == edges:
            autos.append(sigma)
    return autos
