"""Stochastic block model parameters and community-labeled graphs.

Nodes are integers 0..n-1.  Communities are labeled 1..k.  Generated
graphs lay nodes out community-contiguously (community 1 first), but
nothing downstream relies on contiguity beyond the generator itself.
Edges are canonical pairs (u, v) with u < v and no self loops.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# canonical community pair (i, j), 1-based, i <= j
Block = tuple[int, int]


def canonical_block(i: int, j: int) -> Block:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class ModelParams:
    """Block model: community sizes, symmetric edge probabilities, edge sample rate."""

    k: int
    sizes: tuple[int, ...]
    edge_prob: tuple[tuple[float, ...], ...]
    sample_prob: float

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(x) for x in self.sizes))
        object.__setattr__(
            self, "edge_prob", tuple(tuple(float(p) for p in row) for row in self.edge_prob)
        )
        object.__setattr__(self, "sample_prob", float(self.sample_prob))
        if self.k != len(self.sizes):
            raise ValueError(f"k={self.k} but {len(self.sizes)} community sizes given")
        if any(sz < 1 for sz in self.sizes):
            raise ValueError(f"community sizes must be >= 1, got {self.sizes}")
        if len(self.edge_prob) != self.k or any(len(row) != self.k for row in self.edge_prob):
            raise ValueError("edge_prob must be a k x k matrix")
        for a in range(self.k):
            for b in range(self.k):
                p = self.edge_prob[a][b]
                if not 0.0 <= p <= 1.0:
                    raise ValueError(
                        f"edge_prob entry ({a + 1},{b + 1}) = {p} outside [0, 1]"
                    )
                if p != self.edge_prob[b][a]:
                    raise ValueError(
                        f"edge_prob not symmetric at ({a + 1},{b + 1}): "
                        f"{p} != {self.edge_prob[b][a]}"
                    )
        if not 0.0 < self.sample_prob <= 1.0:
            raise ValueError(f"sample_prob = {self.sample_prob} outside (0, 1]")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    def prob(self, i: int, j: int) -> float:
        """Edge probability for the (i, j) community pair, 1-based."""
        return self.edge_prob[i - 1][j - 1]

    def blocks(self) -> list[Block]:
        """All canonical community pairs in (i, j) lexicographic order."""
        return [(i, j) for i in range(1, self.k + 1) for j in range(i, self.k + 1)]

    def community_layout(self) -> tuple[int, ...]:
        """Contiguous node -> community map: community 1 first, then 2, ..."""
        out = []
        for c, sz in enumerate(self.sizes, start=1):
            out.extend([c] * sz)
        return tuple(out)

    @classmethod
    def single(cls, n: int, p: float, s: float) -> "ModelParams":
        return cls(1, (n,), ((p,),), s)

    @classmethod
    def two_block(cls, n1: int, n2: int, p: float, q: float, s: float) -> "ModelParams":
        return cls(2, (n1, n2), ((p, q), (q, p)), s)


def validate_params(params: ModelParams, mode: str = "strict") -> ModelParams:
    """Check params against the regime a caller needs.

    strict: every edge probability must lie in the open interval (0, 1/2)
    and sample_prob in (0, 1].  This is the regime where the mismatch
    weights are positive and finite (or +inf only at sample_prob = 1), so
    weighted matching is meaningful.

    generation-only: the constructor invariants (probabilities in [0, 1],
    sample_prob in (0, 1]) suffice; graphs can be generated but weighted
    costs may be degenerate.
    """
    if mode not in ("strict", "generation-only", "generation"):
        raise ValueError(f"unknown validation mode {mode!r}")
    if mode == "strict":
        for i in range(1, params.k + 1):
            for j in range(i, params.k + 1):
                p = params.prob(i, j)
                if not 0.0 < p < 0.5:
                    raise ValueError(
                        f"edge_prob entry ({i},{j}) = {p} outside (0, 0.5): "
                        "weighted matching costs are only valid on that interval"
                    )
    return params


@dataclass(frozen=True)
class CommunityGraph:
    """Undirected graph with a fixed node -> community labeling."""

    community_of: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "community_of", tuple(int(c) for c in self.community_of))
        object.__setattr__(
            self, "edges", frozenset((int(u), int(v)) for u, v in self.edges)
        )
        n = len(self.community_of)
        labels = set(self.community_of)
        if labels and (min(labels) < 1):
            raise ValueError("community labels must be >= 1")
        for u, v in self.edges:
            if not (0 <= u < v < n):
                raise ValueError(f"edge ({u},{v}) not canonical on {n} nodes")

    @property
    def n(self) -> int:
        return len(self.community_of)

    @property
    def k(self) -> int:
        return max(self.community_of) if self.community_of else 0

    @cached_property
    def adjacency_bits(self) -> tuple[int, ...]:
        """Per-node adjacency as an int bitmask: bit v of row u set iff (u,v) is an edge."""
        rows = [0] * self.n
        for u, v in self.edges:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return tuple(rows)

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        return bool((self.adjacency_bits[u] >> v) & 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degree(self, u: int) -> int:
        return self.adjacency_bits[u].bit_count()

    def community_sizes(self) -> tuple[int, ...]:
        sizes = [0] * self.k
        for c in self.community_of:
            sizes[c - 1] += 1
        return tuple(sizes)

    def block_of(self, u: int, v: int) -> Block:
        """Community pair for the node pair (u, v).  Pairs only: u != v."""
        if u == v:
            raise ValueError("no block for a self pair")
        return canonical_block(self.community_of[u], self.community_of[v])

    def per_block_edge_counts(self) -> dict[Block, int]:
        counts: dict[Block, int] = {
            (i, j): 0 for i in range(1, self.k + 1) for j in range(i, self.k + 1)
        }
        for u, v in self.edges:
            counts[self.block_of(u, v)] += 1
        return counts


def block_of(g: CommunityGraph, u: int, v: int) -> Block:
    return g.block_of(u, v)


def block_pair_count(params: ModelParams, block: Block) -> int:
    """Number of node pairs in a community pair: C(n_i, 2) on the diagonal, n_i * n_j off it."""
    i, j = block
    if not (1 <= i <= j <= params.k):
        raise ValueError(f"block {block} out of range for k={params.k}")
    if i == j:
        n_i = params.sizes[i - 1]
        return n_i * (n_i - 1) // 2
    return params.sizes[i - 1] * params.sizes[j - 1]


def generate_sbm(params: ModelParams, seed) -> CommunityGraph:
    """Draw one graph: each node pair independently an edge with its block probability.

    Deterministic given (params, seed).  Nodes are laid out community-
    contiguously, so pairs split cleanly into per-block index ranges and
    each block is filled with one vectorized Bernoulli draw.
    """
    rng = np.random.default_rng(seed)
    community_of = params.community_layout()
    offsets = np.concatenate(([0], np.cumsum(params.sizes)))
    edges: list[tuple[int, int]] = []
    for i in range(1, params.k + 1):
        for j in range(i, params.k + 1):
            p = params.prob(i, j)
            if p <= 0.0:
                continue
            if i == j:
                n_i = params.sizes[i - 1]
                iu, iv = np.triu_indices(n_i, k=1)
                iu = iu + offsets[i - 1]
                iv = iv + offsets[i - 1]
            else:
                a = np.arange(offsets[i - 1], offsets[i])
                b = np.arange(offsets[j - 1], offsets[j])
                iu = np.repeat(a, len(b))
                iv = np.tile(b, len(a))
            mask = rng.random(len(iu)) < p
            edges.extend(zip(iu[mask].tolist(), iv[mask].tolist()))
    return CommunityGraph(community_of, frozenset(edges))


# --- JSON round trip -------------------------------------------------------
#
# Graph files: {"n": ..., "community_of": [...], "edges": [[u, v], ...]}
# with edges sorted lexicographically.  Params files mirror ModelParams.


def params_to_json(params: ModelParams) -> dict:
    return {
        "k": params.k,
        "sizes": list(params.sizes),
        "edge_prob": [list(row) for row in params.edge_prob],
        "sample_prob": params.sample_prob,
    }


def params_from_json(obj: dict) -> ModelParams:
    return ModelParams(
        k=obj["k"],
        sizes=tuple(obj["sizes"]),
        edge_prob=tuple(tuple(row) for row in obj["edge_prob"]),
        sample_prob=obj["sample_prob"],
    )


def graph_to_json(g: CommunityGraph) -> dict:
    return {
        "n": g.n,
        "community_of": list(g.community_of),
        "edges": [[u, v] for u, v in g.sorted_edges()],
    }


def graph_from_json(obj: dict) -> CommunityGraph:
    g = CommunityGraph(tuple(obj["community_of"]), frozenset(map(tuple, obj["edges"])))
    if g.n != obj["n"]:
        raise ValueError(f"graph file claims n={obj['n']} but lists {g.n} community labels")
    return g


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
