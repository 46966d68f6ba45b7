"""Directed influence graphs: storage, edge-list I/O, probability and cost models.

Edges are kept in insertion order (``src``, ``dst``, ``prob``) and mirrored by
CSR views over out- and in-edges.  Node ids are dense ``0..n-1``; the original
integer labels read from disk are kept in ``labels`` so dumps can write them back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphFormatError",
    "InfluenceGraph",
    "ProbModel",
    "load_edge_list",
    "load_costs",
    "load_graph",
    "save_edge_list",
    "save_costs",
    "assign_probabilities",
    "assign_costs",
]


class GraphFormatError(ValueError):
    """Malformed edge-list or cost input, or an invalid graph."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _csr(keys: np.ndarray, n: int, order: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(keys, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return _frozen(ptr), _frozen(order.astype(np.int64))


@dataclass(frozen=True, eq=False)
class InfluenceGraph:
    """Immutable directed graph with edge probabilities and node costs."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    cost: np.ndarray
    labels: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        prob = np.ascontiguousarray(self.prob, dtype=np.float64)
        cost = np.ascontiguousarray(self.cost, dtype=np.float64)
        labels = (
            np.arange(self.n, dtype=np.int64)
            if self.labels is None
            else np.ascontiguousarray(self.labels, dtype=np.int64)
        )
        n = int(self.n)
        if n < 0:
            raise GraphFormatError("node count must be non-negative")
        if not (src.shape == dst.shape == prob.shape) or src.ndim != 1:
            raise GraphFormatError("src, dst and prob must be 1-d arrays of equal length")
        if cost.shape != (n,) or labels.shape != (n,):
            raise GraphFormatError(f"cost and labels must have length n={n}")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphFormatError("edge endpoint out of range")
            loops = np.flatnonzero(src == dst)
            if loops.size:
                raise GraphFormatError(f"self-loop on node {labels[src[loops[0]]]}")
            bad = np.flatnonzero(~((prob > 0.0) & (prob <= 1.0)))
            if bad.size:
                e = bad[0]
                raise GraphFormatError(
                    f"edge ({labels[src[e]]}, {labels[dst[e]]}) probability {prob[e]!r} outside (0, 1]"
                )
            key = src * n + dst
            uniq, first, counts = np.unique(key, return_index=True, return_counts=True)
            if uniq.size != key.size:
                e = first[np.flatnonzero(counts > 1)[0]]
                raise GraphFormatError(f"duplicate edge ({labels[src[e]]}, {labels[dst[e]]})")
        if cost.size and not np.all(cost > 0.0):
            raise GraphFormatError("node costs must be strictly positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "src", _frozen(src))
        object.__setattr__(self, "dst", _frozen(dst))
        object.__setattr__(self, "prob", _frozen(prob))
        object.__setattr__(self, "cost", _frozen(cost))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def m(self) -> int:
        return int(self.src.size)

    @cached_property
    def _out(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.lexsort((self.dst, self.src))
        return _csr(self.src, self.n, order)

    @cached_property
    def _in(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.lexsort((self.src, self.dst))
        return _csr(self.dst, self.n, order)

    @property
    def out_ptr(self) -> np.ndarray:
        return self._out[0]

    @property
    def out_eid(self) -> np.ndarray:
        """Edge ids grouped by source, ascending target within a group."""
        return self._out[1]

    @property
    def in_ptr(self) -> np.ndarray:
        return self._in[0]

    @property
    def in_eid(self) -> np.ndarray:
        return self._in[1]

    @cached_property
    def out_dst(self) -> np.ndarray:
        return _frozen(self.dst[self.out_eid])

    @cached_property
    def out_prob(self) -> np.ndarray:
        return _frozen(self.prob[self.out_eid])

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.out_ptr))

    @cached_property
    def in_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.in_ptr))

    def out_edges(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        return self.out_dst[lo:hi], self.out_prob[lo:hi]

    def in_edges(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        eids = self.in_eid[self.in_ptr[v] : self.in_ptr[v + 1]]
        return self.src[eids], self.prob[eids]

    @cached_property
    def _edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(u), int(v)): e for e, (u, v) in enumerate(zip(self.src, self.dst))}

    def edge_id(self, u: int, v: int) -> int | None:
        return self._edge_index.get((int(u), int(v)))

    def edge_prob(self, u: int, v: int) -> float:
        e = self.edge_id(u, v)
        if e is None:
            raise KeyError(f"no edge ({u}, {v})")
        return float(self.prob[e])

    def with_probs(self, prob: np.ndarray) -> "InfluenceGraph":
        return InfluenceGraph(self.n, self.src, self.dst, prob, self.cost, self.labels)

    def with_costs(self, cost: np.ndarray) -> "InfluenceGraph":
        return InfluenceGraph(self.n, self.src, self.dst, self.prob, cost, self.labels)

    def subgraph(self, nodes: Iterable[int]) -> tuple["InfluenceGraph", np.ndarray]:
        """Induced subgraph on ``nodes``; returns it with the local->global id map."""
        keep = np.unique(np.fromiter(nodes, dtype=np.int64))
        loc = np.full(self.n, -1, dtype=np.int64)
        loc[keep] = np.arange(keep.size)
        mask = (loc[self.src] >= 0) & (loc[self.dst] >= 0)
        sub = InfluenceGraph(
            keep.size,
            loc[self.src[mask]],
            loc[self.dst[mask]],
            self.prob[mask],
            self.cost[keep],
            self.labels[keep],
        )
        return sub, keep

    def summary(self) -> dict[str, float]:
        """Size and degree statistics (total degree = in + out)."""
        n, m = self.n, self.m
        deg = self.in_degree + self.out_degree
        return {
            "nodes": n,
            "edges": m,
            "density": m / (n * (n - 1)) if n > 1 else 0.0,
            "max_degree": int(deg.max()) if n else 0,
            "mean_degree": 2.0 * m / n if n else 0.0,
            "max_out_degree": int(self.out_degree.max()) if n else 0,
        }

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[float]],
        cost: Sequence[float] | np.ndarray | None = None,
    ) -> "InfluenceGraph":
        """Build from ``(u, v, p)`` triples on dense ids; costs default to 1."""
        rows = [(int(e[0]), int(e[1]), float(e[2])) for e in edges]
        arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
        return cls(
            n,
            arr[:, 0].astype(np.int64),
            arr[:, 1].astype(np.int64),
            arr[:, 2],
            np.ones(n) if cost is None else np.asarray(cost, dtype=np.float64),
        )


# ---------------------------------------------------------------------------
# file formats


def _data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_edges(path: Path, default_prob: float | None):
    rows: list[tuple[int, int, float]] = []
    for lineno, tok in _data_lines(path):
        if len(tok) not in (2, 3):
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v [p]', got {len(tok)} fields")
        try:
            u, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: node ids must be integers") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{path}:{lineno}: node ids must be non-negative")
        if len(tok) == 3:
            try:
                p = float(tok[2])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: bad probability {tok[2]!r}") from None
        elif default_prob is not None:
            p = float(default_prob)
        else:
            raise GraphFormatError(f"{path}:{lineno}: missing probability and no default_prob")
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on node {u}")
        if not (0.0 < p <= 1.0) or math.isnan(p):
            raise GraphFormatError(f"{path}:{lineno}: probability {p!r} outside (0, 1]")
        rows.append((u, v, p))
    return rows


def _parse_costs(path: Path) -> dict[int, float]:
    costs: dict[int, float] = {}
    for lineno, tok in _data_lines(path):
        if len(tok) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u c'")
        try:
            u, c = int(tok[0]), float(tok[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: malformed cost line") from None
        if u < 0:
            raise GraphFormatError(f"{path}:{lineno}: node ids must be non-negative")
        if not c > 0.0:
            raise GraphFormatError(f"{path}:{lineno}: cost must be positive, got {c!r}")
        if u in costs:
            raise GraphFormatError(f"{path}:{lineno}: duplicate cost for node {u}")
        costs[u] = c
    return costs


def load_graph(
    edges_path: str | Path,
    costs_path: str | Path | None = None,
    default_prob: float | None = None,
) -> InfluenceGraph:
    """Read an edge list and optional cost file into a graph.

    Labels from both files are remapped to dense ids in ascending label order.
    Nodes missing from the cost file get cost 1.
    """
    edges_path = Path(edges_path)
    rows = _parse_edges(edges_path, default_prob)
    costs = _parse_costs(Path(costs_path)) if costs_path is not None else {}
    ids = {u for u, _, _ in rows} | {v for _, v, _ in rows} | set(costs)
    labels = np.array(sorted(ids), dtype=np.int64)
    loc = {int(lab): i for i, lab in enumerate(labels)}
    seen: dict[tuple[int, int], int] = {}
    for i, (u, v, _) in enumerate(rows):
        if (u, v) in seen:
            raise GraphFormatError(f"{edges_path}: duplicate edge ({u}, {v})")
        seen[(u, v)] = i
    n = labels.size
    src = np.array([loc[u] for u, _, _ in rows], dtype=np.int64)
    dst = np.array([loc[v] for _, v, _ in rows], dtype=np.int64)
    prob = np.array([p for _, _, p in rows], dtype=np.float64)
    cost = np.ones(n)
    for u, c in costs.items():
        cost[loc[u]] = c
    return InfluenceGraph(n, src, dst, prob, cost, labels)


def load_edge_list(path: str | Path, default_prob: float | None = None) -> InfluenceGraph:
    """Read a ``u v [p]`` edge list; all costs are 1."""
    return load_graph(path, None, default_prob)


def load_costs(g: InfluenceGraph, path: str | Path) -> InfluenceGraph:
    """Apply a ``u c`` cost file (original labels) to an existing graph."""
    costs = _parse_costs(Path(path))
    loc = {int(lab): i for i, lab in enumerate(g.labels)}
    cost = np.array(g.cost, copy=True)
    for u, c in costs.items():
        if u not in loc:
            raise GraphFormatError(f"{path}: cost for unknown node {u}")
        cost[loc[u]] = c
    return g.with_costs(cost)


def save_edge_list(g: InfluenceGraph, path: str | Path, header: str | None = None) -> None:
    """Write edges as ``u v p`` with original labels; floats use ``repr`` so reads are exact."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        lab = g.labels
        for u, v, p in zip(g.src.tolist(), g.dst.tolist(), g.prob.tolist()):
            fh.write(f"{lab[u]} {lab[v]} {p!r}\n")


def save_costs(g: InfluenceGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab, c in zip(g.labels.tolist(), g.cost.tolist()):
            fh.write(f"{lab} {c!r}\n")


# ---------------------------------------------------------------------------
# probability and cost models


@dataclass(frozen=True)
class ProbModel:
    """Edge-probability model.

    ``wc``: 1/in-degree of the target.  ``tv``: uniform pick from ``tv_values``.
    ``ra``: uniform on ``ra_range``.  ``pl``: density proportional to
    ``x**-pl_beta`` truncated to ``pl_range`` (``pl_alpha`` is recorded for
    reference only; the truncated density is normalized).
    """

    kind: str = "ra"
    ra_range: tuple[float, float] = (0.001, 0.2)
    tv_values: tuple[float, ...] = (0.1, 0.01, 0.001)
    pl_alpha: float = 0.05
    pl_beta: float = 0.9
    pl_range: tuple[float, float] = (0.001, 0.2)

    def __post_init__(self) -> None:
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("wc", "tv", "ra", "pl"):
            raise ValueError(f"unknown probability model {self.kind!r}")
        lo, hi = self.ra_range
        if not (0.0 < lo < hi <= 1.0):
            raise ValueError(f"RA range must satisfy 0 < lo < hi <= 1, got {self.ra_range}")
        lo, hi = self.pl_range
        if not (0.0 < lo < hi <= 1.0):
            raise ValueError(f"PL range must satisfy 0 < lo < hi <= 1, got {self.pl_range}")
        if not self.pl_alpha > 0.0 or not self.pl_beta >= 0.0:
            raise ValueError("PL requires alpha > 0 and beta >= 0")
        if not self.tv_values or not all(0.0 < v <= 1.0 for v in self.tv_values):
            raise ValueError("TV values must be a non-empty set in (0, 1]")

    def pl_mean(self) -> float:
        """Analytic mean of the truncated power-law density."""
        lo, hi = self.pl_range
        b = self.pl_beta

        def integral(k: float) -> float:
            # int_lo^hi x^k dx
            if abs(k + 1.0) < 1e-15:
                return math.log(hi / lo)
            return (hi ** (k + 1.0) - lo ** (k + 1.0)) / (k + 1.0)

        return integral(1.0 - b) / integral(-b)


def sample_power_law(rng: np.random.Generator, size: int, beta: float, lo: float, hi: float) -> np.ndarray:
    """Inverse-CDF draws from density proportional to x**-beta on [lo, hi]."""
    u = rng.random(size)
    if abs(beta - 1.0) < 1e-12:
        return lo * (hi / lo) ** u
    a = 1.0 - beta
    return (lo**a + u * (hi**a - lo**a)) ** (1.0 / a)


def assign_probabilities(g: InfluenceGraph, model: ProbModel | str, rng_seed: int = 0) -> InfluenceGraph:
    """Return a copy of ``g`` with edge probabilities drawn from ``model``."""
    if isinstance(model, str):
        model = ProbModel(model)
    if g.m == 0:
        raise ValueError("graph has no edges")
    rng = np.random.default_rng(rng_seed)
    if model.kind == "wc":
        d = g.in_degree[g.dst].astype(np.float64)
        prob = 1.0 / d
    elif model.kind == "tv":
        vals = np.asarray(model.tv_values, dtype=np.float64)
        prob = vals[rng.integers(0, vals.size, size=g.m)]
    elif model.kind == "ra":
        lo, hi = model.ra_range
        prob = rng.uniform(lo, hi, size=g.m)
    else:
        lo, hi = model.pl_range
        prob = sample_power_law(rng, g.m, model.pl_beta, lo, hi)
    return g.with_probs(prob)


def assign_costs(
    g: InfluenceGraph,
    mode: str | tuple[float, float] = "unit",
    rng_seed: int = 0,
) -> InfluenceGraph:
    """Unit costs (``"unit"``) or i.i.d. uniform costs on ``(lo, hi)``."""
    if isinstance(mode, str):
        if mode != "unit":
            raise ValueError(f"unknown cost mode {mode!r}")
        return g.with_costs(np.ones(g.n))
    lo, hi = (float(x) for x in mode)
    if not (lo > 0.0 and hi > 0.0):
        raise ValueError(f"cost bounds must be positive, got ({lo}, {hi})")
    if hi < lo:
        raise ValueError(f"cost bounds out of order: ({lo}, {hi})")
    rng = np.random.default_rng(rng_seed)
    return g.with_costs(rng.uniform(lo, hi, size=g.n))
