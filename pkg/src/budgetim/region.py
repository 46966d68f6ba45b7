"""Maximum influence paths, MIOA trees and the Peer Seeds overlap index.

Path weights are ``-log10 p``; a node belongs to a tree when its best path
probability is at least ``theta``.  Best paths are chosen by (weight, hops)
and then by the smallest predecessor id, which keeps every tree prefix a best
path itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .graph import InfluenceGraph

DEFAULT_THETA = 1.0 / 160.0
LIMIT_SLACK = 1e-12


def log_weights(g: InfluenceGraph) -> np.ndarray:
    """``-log10 p`` per out-edge slot (CSR order)."""
    w = -np.log10(g.out_prob)
    return np.maximum(w, 0.0)


def rank_limit(theta: float) -> float:
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    return -math.log10(theta) + LIMIT_SLACK


def path_prob(g: InfluenceGraph, path: Sequence[int]) -> float:
    """Product of edge probabilities along ``path`` (1 for a single node)."""
    if len(path) == 0:
        raise ValueError("empty path")
    p = 1.0
    for u, v in zip(path[:-1], path[1:]):
        e = g.edge_id(u, v)
        if e is None:
            raise ValueError(f"({u}, {v}) is not an edge")
        p *= float(g.prob[e])
    return p


@dataclass(frozen=True, eq=False)
class MioaTree:
    """Out-arborescence of best paths from ``root``, members in settle order."""

    root: int
    theta: float
    members: np.ndarray
    parent: np.ndarray  # -1 for the root
    rank: np.ndarray  # -log10 of the best path probability
    hops: np.ndarray
    edge_prob: np.ndarray  # probability of the tree edge into each member

    @property
    def path_prob(self) -> np.ndarray:
        return 10.0 ** (-self.rank)

    @cached_property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.members.tolist())

    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(p), int(v), float(q))
            for v, p, q in zip(self.members[1:], self.parent[1:], self.edge_prob[1:])
        ]

    def path_to(self, v: int) -> list[int]:
        where = {int(x): i for i, x in enumerate(self.members)}
        if v not in where:
            raise KeyError(f"{v} is not in the tree of {self.root}")
        path = [v]
        while path[-1] != self.root:
            path.append(int(self.parent[where[path[-1]]]))
        return path[::-1]


def build_mioa(g: InfluenceGraph, root: int, theta: float = DEFAULT_THETA) -> MioaTree:
    """Best-path out-arborescence of ``root`` truncated at probability ``theta``."""
    limit = rank_limit(theta)
    if not (0 <= root < g.n):
        raise ValueError(f"unknown node {root}")
    mem, par, dist, hops, inp = _kernels.dijkstra_region(
        g.out_ptr, g.out_dst, log_weights(g), g.out_prob, np.array([root], dtype=np.int64), limit
    )
    return MioaTree(int(root), float(theta), mem, par, dist, hops, inp)


class MioaForest:
    """Every node's MIOA tree, stored as one concatenated CSR block."""

    def __init__(self, g: InfluenceGraph, theta: float = DEFAULT_THETA):
        self.theta = float(theta)
        self.n = g.n
        limit = rank_limit(theta)
        ptr, mem, par, dist, hops, inp = _kernels.mioa_forest(g.out_ptr, g.out_dst, log_weights(g), g.out_prob, limit)
        self.ptr = ptr
        self.members = mem
        self.parent = par
        self.rank = dist
        self.hops = hops
        self.edge_prob = inp
        # per-member root id, used for inverse lookups and vectorized sums
        self.owner = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(ptr))

    def __len__(self) -> int:
        return self.n

    def size(self, v: int) -> int:
        return int(self.ptr[v + 1] - self.ptr[v])

    def tree(self, v: int) -> MioaTree:
        lo, hi = self.ptr[v], self.ptr[v + 1]
        return MioaTree(
            int(v),
            self.theta,
            self.members[lo:hi],
            self.parent[lo:hi],
            self.rank[lo:hi],
            self.hops[lo:hi],
            self.edge_prob[lo:hi],
        )

    def __getitem__(self, v: int) -> MioaTree:
        return self.tree(v)

    def tree_spreads(self) -> np.ndarray:
        """Sum of path probabilities per tree (the spread of each root on its own tree)."""
        out = np.zeros(self.n)
        np.add.at(out, self.owner, 10.0 ** (-self.rank))
        return out


def build_all_mioa(g: InfluenceGraph, theta: float = DEFAULT_THETA) -> MioaForest:
    return MioaForest(g, theta)


class PeerSeedsIndex:
    """Nodes whose MIOA trees share at least one member.

    Peers of ``v`` are gathered on demand from an inverted index
    (member -> roots containing it) and cached; the relation is symmetric and
    reflexive by construction.
    """

    def __init__(self, theta: float, n: int, tree_ptr: np.ndarray, tree_members: np.ndarray, owner: np.ndarray):
        self.theta = float(theta)
        self.n = n
        self._tree_ptr = tree_ptr
        self._tree_members = tree_members
        order = np.argsort(tree_members, kind="stable")
        self._inv_roots = owner[order]
        counts = np.bincount(tree_members, minlength=n)
        self._inv_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self._inv_ptr[1:])
        self._cache: dict[int, np.ndarray] = {}

    def containing(self, w: int) -> np.ndarray:
        """Roots whose tree contains ``w``."""
        return self._inv_roots[self._inv_ptr[w] : self._inv_ptr[w + 1]]

    def peers(self, v: int) -> np.ndarray:
        v = int(v)
        hit = self._cache.get(v)
        if hit is None:
            mem = self._tree_members[self._tree_ptr[v] : self._tree_ptr[v + 1]]
            parts = [self.containing(int(w)) for w in mem]
            hit = np.unique(np.concatenate(parts)) if parts else np.array([v], dtype=np.int64)
            self._cache[v] = hit
        return hit

    def __getitem__(self, v: int) -> frozenset[int]:
        return frozenset(self.peers(v).tolist())

    def as_sets(self) -> list[frozenset[int]]:
        return [self[v] for v in range(self.n)]


def build_peer_seeds(trees: MioaForest | Sequence[MioaTree], theta: float) -> PeerSeedsIndex:
    """Peer Seeds index from one tree per node, all built at ``theta``."""
    if isinstance(trees, MioaForest):
        if trees.theta != theta:
            raise ValueError(f"trees were built with theta={trees.theta}, asked for {theta}")
        return PeerSeedsIndex(theta, trees.n, trees.ptr, trees.members, trees.owner)
    trees = list(trees)
    n = len(trees)
    for i, t in enumerate(trees):
        if t.theta != theta:
            raise ValueError(f"tree of {t.root} built with theta={t.theta}, asked for {theta}")
        if t.root != i:
            raise ValueError("expected one tree per node, ordered by root id")
    sizes = np.array([t.members.size for t in trees], dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    members = np.concatenate([t.members for t in trees]) if n else np.zeros(0, dtype=np.int64)
    owner = np.repeat(np.arange(n, dtype=np.int64), sizes)
    return PeerSeedsIndex(theta, n, ptr, members, owner)
