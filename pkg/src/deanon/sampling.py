"""Correlated edge sampling and hidden node matchings.

A de-anonymization instance starts from one ground-truth graph g.  Two
graphs are derived by keeping each edge of g independently with
probability s (twice, independently).  The second copy is then
relabeled by a hidden community-preserving permutation.  Recovering
that permutation from the pair is the estimation problem everything
else in this package studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .graphs import (
    CommunityGraph,
    ModelParams,
    generate_sbm,
    graph_from_json,
    graph_to_json,
    params_from_json,
    params_to_json,
    validate_params,
)


@dataclass(frozen=True)
class Matching:
    """Bijection between two graphs' node label spaces, stored as forward[v] = image of v."""

    forward: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(int(x) for x in self.forward))
        n = len(self.forward)
        if sorted(self.forward) != list(range(n)):
            raise ValueError("forward map is not a permutation of 0..n-1")

    @property
    def n(self) -> int:
        return len(self.forward)

    @classmethod
    def identity(cls, n: int) -> "Matching":
        return cls(tuple(range(n)))

    @cached_property
    def _inverse_forward(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for v, img in enumerate(self.forward):
            inv[img] = v
        return tuple(inv)

    def inverse(self) -> "Matching":
        return Matching(self._inverse_forward)

    def apply_pair(self, u: int, v: int) -> tuple[int, int]:
        """Image of a canonical node pair, canonicalized."""
        a, b = self.forward[u], self.forward[v]
        return (a, b) if a < b else (b, a)

    def after(self, inner: "Matching") -> "Matching":
        """Composition self(inner(v)): apply inner first, then self."""
        return Matching(tuple(self.forward[x] for x in inner.forward))

    def is_community_preserving(self, community_of: Sequence[int]) -> bool:
        return all(community_of[v] == community_of[img] for v, img in enumerate(self.forward))

    def fixed_points(self) -> int:
        return sum(1 for v, img in enumerate(self.forward) if v == img)


def _require_community_preserving(matching: Matching, community_of: Sequence[int]) -> None:
    for v, img in enumerate(matching.forward):
        if community_of[v] != community_of[img]:
            raise ValueError(
                f"matching sends node {v} (community {community_of[v]}) to "
                f"node {img} (community {community_of[img]})"
            )


def sample_edges(g: CommunityGraph, s: float, seed) -> CommunityGraph:
    """Keep each edge of g independently with probability s; node labels unchanged."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"sample probability {s} outside (0, 1]")
    edges = g.sorted_edges()
    rng = np.random.default_rng(seed)
    mask = rng.random(len(edges)) < s
    kept = frozenset(e for e, keep in zip(edges, mask) if keep)
    return CommunityGraph(g.community_of, kept)


def _random_matching_from_layout(community_of: Sequence[int], rng) -> Matching:
    members: dict[int, list[int]] = {}
    for v, c in enumerate(community_of):
        members.setdefault(c, []).append(v)
    forward = [0] * len(community_of)
    for c in sorted(members):
        nodes = members[c]
        perm = rng.permutation(len(nodes))
        for src_idx, dst_idx in enumerate(perm):
            forward[nodes[src_idx]] = nodes[dst_idx]
    return Matching(tuple(forward))


def random_matching(params: ModelParams, seed) -> Matching:
    """Uniform community-preserving permutation (independent uniform shuffle per community)."""
    rng = np.random.default_rng(seed)
    return _random_matching_from_layout(params.community_layout(), rng)


def apply_matching(g: CommunityGraph, matching: Matching) -> CommunityGraph:
    """Relabel g by a community-preserving matching.  Community labels stay in place."""
    if matching.n != g.n:
        raise ValueError(f"matching on {matching.n} nodes applied to graph on {g.n}")
    _require_community_preserving(matching, g.community_of)
    edges = frozenset(matching.apply_pair(u, v) for u, v in g.edges)
    return CommunityGraph(g.community_of, edges)


@dataclass(frozen=True)
class DeanonInstance:
    """One simulated problem: ground truth g, observed pair (g1, g2), hidden matching."""

    params: ModelParams
    g: CommunityGraph
    g1: CommunityGraph
    g2: CommunityGraph
    truth: Matching
    seeds: tuple[tuple[str, int], ...]

    def __post_init__(self):
        layout = self.params.community_layout()
        for name, graph in (("g", self.g), ("g1", self.g1), ("g2", self.g2)):
            if graph.community_of != layout:
                raise ValueError(f"{name} does not share the params community layout")
        if not self.g1.edges <= self.g.edges:
            raise ValueError("g1 has an edge absent from the ground truth graph")
        inv = self.truth.inverse()
        unmapped = frozenset(inv.apply_pair(u, v) for u, v in self.g2.edges)
        if not unmapped <= self.g.edges:
            raise ValueError("g2, mapped back by the true matching, leaves the ground truth graph")
        _require_community_preserving(self.truth, layout)

    def seed_value(self, name: str) -> int:
        for key, val in self.seeds:
            if key == name:
                return val
        raise KeyError(name)


def make_instance(params: ModelParams, seed: int, identity_truth: bool = False) -> DeanonInstance:
    """Build a full instance from one master seed.

    The master seed splits into four independent streams (graph, first
    sample, second sample, permutation), so regenerating with the same
    seed reproduces the instance bit for bit.  identity_truth pins the
    hidden matching to the identity; the sampling streams are unchanged.
    """
    validate_params(params, mode="generation-only")
    seed = int(seed)
    ss = np.random.SeedSequence(seed)
    graph_ss, s1_ss, s2_ss, perm_ss = ss.spawn(4)
    g = generate_sbm(params, graph_ss)
    s = params.sample_prob
    g1 = sample_edges(g, s, s1_ss)
    h = sample_edges(g, s, s2_ss)
    if identity_truth:
        truth = Matching.identity(params.n)
    else:
        truth = _random_matching_from_layout(
            params.community_layout(), np.random.default_rng(perm_ss)
        )
    g2 = apply_matching(h, truth)
    return DeanonInstance(
        params=params,
        g=g,
        g1=g1,
        g2=g2,
        truth=truth,
        seeds=(("master", seed), ("identity_truth", int(identity_truth))),
    )


# --- JSON round trip -------------------------------------------------------


def matching_to_json(matching: Matching) -> dict:
    return {"forward": list(matching.forward)}


def matching_from_json(obj) -> Matching:
    if isinstance(obj, dict):
        return Matching(tuple(obj["forward"]))
    return Matching(tuple(obj))


def instance_to_json(inst: DeanonInstance) -> dict:
    return {
        "params": params_to_json(inst.params),
        "g": graph_to_json(inst.g),
        "g1": graph_to_json(inst.g1),
        "g2": graph_to_json(inst.g2),
        "truth": matching_to_json(inst.truth),
        "seeds": {name: val for name, val in inst.seeds},
    }


def instance_from_json(obj: dict) -> DeanonInstance:
    return DeanonInstance(
        params=params_from_json(obj["params"]),
        g=graph_from_json(obj["g"]),
        g1=graph_from_json(obj["g1"]),
        g2=graph_from_json(obj["g2"]),
        truth=matching_from_json(obj["truth"]),
        seeds=tuple((str(k), int(v)) for k, v in obj["seeds"].items()),
    )
