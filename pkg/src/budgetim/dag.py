"""DAG reductions of a seed set's influence region.

Both builders order nodes by the key ``(rank, hops, node id)`` where ``rank``
is the best ``-log10`` path weight from any seed and ``hops`` the length of
that best path.  An edge is kept only if it goes forward in this order, which
makes the result acyclic and puts every seed (key ``(0, 0, id)``) ahead of all
non-seeds.  Edges between two seeds are always dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .graph import InfluenceGraph
from .region import DEFAULT_THETA, MioaForest, MioaTree, log_weights, rank_limit


@dataclass(frozen=True, eq=False)
class InfluenceDag:
    nodes: np.ndarray  # topological order
    rank: np.ndarray
    hops: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    seeds: frozenset
    theta: float = DEFAULT_THETA
    kind: str = "custom"

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=np.int64)
        if np.unique(nodes).size != nodes.size:
            raise ValueError("duplicate DAG nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "src", np.asarray(self.src, dtype=np.int64))
        object.__setattr__(self, "dst", np.asarray(self.dst, dtype=np.int64))
        object.__setattr__(self, "prob", np.asarray(self.prob, dtype=np.float64))
        object.__setattr__(self, "rank", np.asarray(self.rank, dtype=np.float64))
        object.__setattr__(self, "hops", np.asarray(self.hops, dtype=np.int64))
        object.__setattr__(self, "seeds", frozenset(int(s) for s in self.seeds))
        ls, ld = self.local_edges
        if ls.size and not np.all(ls < ld):
            raise ValueError("edge goes backwards in the topological order")
        if not self.seeds <= set(nodes.tolist()):
            raise ValueError("seeds must be DAG nodes")

    @property
    def topo_order(self) -> np.ndarray:
        return self.nodes

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    @cached_property
    def _lookup(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.nodes, kind="stable")
        return self.nodes[order], order

    def local(self, ids: np.ndarray) -> np.ndarray:
        """Positions in the topological order of the given node ids."""
        sorted_ids, order = self._lookup
        ids = np.asarray(ids, dtype=np.int64)
        at = np.searchsorted(sorted_ids, ids)
        if ids.size and (np.any(at >= sorted_ids.size) or np.any(sorted_ids[np.minimum(at, sorted_ids.size - 1)] != ids)):
            raise ValueError("edge endpoint is not a DAG node")
        return order[at]

    @cached_property
    def local_edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.local(self.src), self.local(self.dst)

    @cached_property
    def is_seed(self) -> np.ndarray:
        return np.fromiter((int(v) in self.seeds for v in self.nodes), dtype=np.bool_, count=self.nodes.size)

    @cached_property
    def parent_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Parents of each local node: (ptr, parent local ids, edge probs), ascending parent id."""
        ls, ld = self.local_edges
        order = np.lexsort((self.src, ld))
        ptr = np.zeros(self.nodes.size + 1, dtype=np.int64)
        np.cumsum(np.bincount(ld, minlength=self.nodes.size), out=ptr[1:])
        return ptr, ls[order], self.prob[order]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def rank_of(self) -> dict[int, float]:
        return dict(zip(self.nodes.tolist(), self.rank.tolist()))

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int, float]],
        seeds: Iterable[int],
        nodes: Iterable[int] | None = None,
    ) -> "InfluenceDag":
        """Hand-built DAG; ``nodes`` (or the edges, in first-seen order) must be topological."""
        edges = [(int(u), int(v), float(p)) for u, v, p in edges]
        seeds = [int(s) for s in seeds]
        if nodes is None:
            order: list[int] = []
            seen: set[int] = set()
            for x in seeds + [x for e in edges for x in e[:2]]:
                if x not in seen:
                    seen.add(x)
                    order.append(x)
            nodes = order
        nodes = np.asarray(list(nodes), dtype=np.int64)
        arr = np.array(edges, dtype=np.float64).reshape(-1, 3)
        return cls(
            nodes,
            np.arange(nodes.size, dtype=np.float64),
            np.zeros(nodes.size, dtype=np.int64),
            arr[:, 0].astype(np.int64),
            arr[:, 1].astype(np.int64),
            arr[:, 2],
            frozenset(seeds),
        )


def _seed_array(g: InfluenceGraph, seeds: Iterable[int]) -> np.ndarray:
    s = np.unique(np.fromiter((int(x) for x in seeds), dtype=np.int64))
    if s.size == 0:
        raise ValueError("seed set is empty")
    if s[0] < 0 or s[-1] >= g.n:
        raise ValueError("seed id out of range")
    return s


def _region(g: InfluenceGraph, seeds: np.ndarray, theta: float):
    return _kernels.dijkstra_region(g.out_ptr, g.out_dst, log_weights(g), g.out_prob, seeds, rank_limit(theta))


def node_ranks(g: InfluenceGraph, seeds: Iterable[int], theta: float = DEFAULT_THETA) -> np.ndarray:
    """Best ``-log10`` path weight from any seed; ``inf`` outside the region."""
    s = _seed_array(g, seeds)
    mem, _, dist, _, _ = _region(g, s, theta)
    out = np.full(g.n, np.inf)
    out[mem] = dist
    return out


def _forward_mask(pos: np.ndarray, is_seed: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    ps, pd = pos[src], pos[dst]
    return (ps >= 0) & (pd >= 0) & (ps < pd) & ~(is_seed[src] & is_seed[dst])


def build_dag1(g: InfluenceGraph, seeds: Iterable[int], theta: float = DEFAULT_THETA) -> InfluenceDag:
    """Super-root best-path region plus every forward edge of ``g`` inside it."""
    s = _seed_array(g, seeds)
    mem, _, dist, hops, _ = _region(g, s, theta)
    # settle order of the lexicographic Dijkstra is sorted by (rank, hops, id)
    pos = np.full(g.n, -1, dtype=np.int64)
    pos[mem] = np.arange(mem.size)
    is_seed = np.zeros(g.n, dtype=bool)
    is_seed[s] = True
    keep = _forward_mask(pos, is_seed, g.src, g.dst)
    return InfluenceDag(mem, dist, hops, g.src[keep], g.dst[keep], g.prob[keep], frozenset(s.tolist()), theta, "dag1")


def build_dag2(
    g: InfluenceGraph,
    seeds: Iterable[int],
    trees: MioaForest | Mapping[int, MioaTree],
    theta: float = DEFAULT_THETA,
) -> InfluenceDag:
    """Union of the seeds' cached MIOA trees with backward edges removed."""
    s = _seed_array(g, seeds)
    if isinstance(trees, MioaForest):
        if trees.theta != theta:
            raise ValueError(f"cached trees use theta={trees.theta}, asked for {theta}")
        parts = [(trees.ptr[x], trees.ptr[x + 1]) for x in s]
        mem = np.concatenate([trees.members[a:b] for a, b in parts])
        rnk = np.concatenate([trees.rank[a:b] for a, b in parts])
        hop = np.concatenate([trees.hops[a:b] for a, b in parts])
        par = np.concatenate([trees.parent[a:b] for a, b in parts])
        inp = np.concatenate([trees.edge_prob[a:b] for a, b in parts])
    else:
        ts = [trees[int(x)] for x in s]
        for t in ts:
            if t.theta != theta:
                raise ValueError(f"tree of {t.root} uses theta={t.theta}, asked for {theta}")
        mem = np.concatenate([t.members for t in ts])
        rnk = np.concatenate([t.rank for t in ts])
        hop = np.concatenate([t.hops for t in ts])
        par = np.concatenate([t.parent for t in ts])
        inp = np.concatenate([t.edge_prob for t in ts])

    # best (rank, hops) per node over all seed trees
    order = np.lexsort((hop, rnk, mem))
    mem_s = mem[order]
    first = np.ones(mem_s.size, dtype=bool)
    first[1:] = mem_s[1:] != mem_s[:-1]
    nodes, nrank, nhops = mem_s[first], rnk[order][first], hop[order][first]
    topo = np.lexsort((nodes, nhops, nrank))
    nodes, nrank, nhops = nodes[topo], nrank[topo], nhops[topo]

    tree_edge = par >= 0
    esrc, edst, eprob = par[tree_edge], mem[tree_edge], inp[tree_edge]
    _, uniq = np.unique(esrc * g.n + edst, return_index=True)
    esrc, edst, eprob = esrc[uniq], edst[uniq], eprob[uniq]

    pos = np.full(g.n, -1, dtype=np.int64)
    pos[nodes] = np.arange(nodes.size)
    is_seed = np.zeros(g.n, dtype=bool)
    is_seed[s] = True
    keep = _forward_mask(pos, is_seed, esrc, edst)
    esrc, edst, eprob = esrc[keep], edst[keep], eprob[keep]
    return InfluenceDag(nodes, nrank, nhops, esrc, edst, eprob, frozenset(s.tolist()), theta, "dag2")


def build_dag(
    g: InfluenceGraph,
    seeds: Iterable[int],
    model: str = "dag2",
    theta: float = DEFAULT_THETA,
    trees: MioaForest | Mapping[int, MioaTree] | None = None,
) -> InfluenceDag:
    if model == "dag1":
        return build_dag1(g, seeds, theta)
    if model == "dag2":
        if trees is None:
            raise ValueError("dag2 needs the cached MIOA trees")
        return build_dag2(g, seeds, trees, theta)
    raise ValueError(f"unknown DAG model {model!r}")


def write_dag(dag: InfluenceDag, path: str | Path, labels: np.ndarray | None = None) -> None:
    """Edge list ``u v p rank(v)`` preceded by ``# rank`` lines for every node."""
    lab = (lambda x: int(x)) if labels is None else (lambda x: int(labels[x]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dag model={dag.kind} theta={dag.theta!r} seeds={' '.join(str(lab(s)) for s in sorted(dag.seeds))}\n")
        for v, r in zip(dag.nodes.tolist(), dag.rank.tolist()):
            fh.write(f"# rank {lab(v)} {r!r}\n")
        rank = dag.rank_of()
        for u, v, p in zip(dag.src.tolist(), dag.dst.tolist(), dag.prob.tolist()):
            fh.write(f"{lab(u)} {lab(v)} {p!r} {rank[v]!r}\n")
