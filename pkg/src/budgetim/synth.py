"""Directed scale-free graphs with a power-law out-degree sequence.

Out-degrees are drawn i.i.d. from ``P(d) ~ d^-beta`` on an integer support
``[d_min, d_max]`` whose bounds are fitted so the expected degree is
``m_target / n``.  Each node then picks its targets uniformly at random
among the other nodes, without repeats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import InfluenceGraph

EDGE_TOLERANCE = 0.05
_REDRAW_TOLERANCE = 0.02
_MAX_REDRAWS = 500


@dataclass(frozen=True)
class SynthConfig:
    n: int
    m_target: int
    beta: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 1 <= self.m_target <= self.n * (self.n - 1):
            raise ValueError(f"m_target must lie in [1, n(n-1)] = [1, {self.n * (self.n - 1)}]")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


def _pmf(beta: float, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    d = np.arange(lo, hi + 1, dtype=np.float64)
    w = d ** (-beta)
    return d, w / w.sum()


def _mean(beta: float, lo: int, hi: int) -> float:
    d, p = _pmf(beta, lo, hi)
    return float(d @ p)


def degree_support(n: int, mean: float, beta: float) -> tuple[int, int]:
    """Smallest-``d_min``, then smallest-``d_max`` support whose power-law mean reaches ``mean``.

    Raises when even the support ``[n-1, n-1]`` cannot reach the mean.
    """
    cap = n - 1
    if mean > cap:
        raise ValueError(f"mean out-degree {mean:.3f} exceeds n-1 = {cap}")
    lo = 1
    # raise d_min until the widest support is heavy enough
    if _mean(beta, 1, cap) < mean:
        a, b = 1, cap
        while a < b:
            mid = (a + b) // 2
            if _mean(beta, mid, cap) >= mean:
                b = mid
            else:
                a = mid + 1
        lo = a
    a, b = lo, cap
    while a < b:
        mid = (a + b) // 2
        if _mean(beta, lo, mid) >= mean:
            b = mid
        else:
            a = mid + 1
    return lo, a


def draw_out_degrees(cfg: SynthConfig) -> np.ndarray:
    """Degree sequence with total within 5% of ``m_target`` (2% when a redraw finds one)."""
    n, m = cfg.n, cfg.m_target
    mean = m / n
    ss = np.random.SeedSequence(cfg.rng_seed)
    if mean < 1.0:
        # sparse regime: a fraction of nodes has out-degree >= 1, the rest 0
        support = degree_support(n, 1.0, cfg.beta)
        frac = mean
    else:
        support = degree_support(n, mean, cfg.beta)
        frac = 1.0
    d, p = _pmf(cfg.beta, *support)
    d = d.astype(np.int64)
    best, best_gap = None, np.inf
    for child in ss.spawn(_MAX_REDRAWS):
        r = np.random.default_rng(child)
        deg = r.choice(d, size=n, p=p)
        if frac < 1.0:
            deg = deg * (r.random(n) < frac)
        gap = abs(int(deg.sum()) - m) / m
        if gap < best_gap:
            best, best_gap = deg, gap
        if gap <= _REDRAW_TOLERANCE:
            break
    if best_gap > EDGE_TOLERANCE and abs(int(best.sum()) - m) > 1:
        raise ValueError(f"could not draw a degree sequence within {EDGE_TOLERANCE:.0%} of m_target={m}")
    return best


def generate(cfg: SynthConfig) -> InfluenceGraph:
    """Simple directed graph with power-law out-degrees; all edge probabilities start at 1."""
    deg = draw_out_degrees(cfg)
    n = cfg.n
    if deg.max(initial=0) > n - 1:
        raise ValueError("demanded out-degree exceeds n-1")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 1]))
    src = np.repeat(np.arange(n, dtype=np.int64), deg)
    dst = np.empty(src.size, dtype=np.int64)
    at = 0
    for u in np.flatnonzero(deg):
        k = int(deg[u])
        t = rng.choice(n - 1, size=k, replace=False)
        t[t >= u] += 1  # skip the self-loop slot
        dst[at : at + k] = t
        at += k
    return InfluenceGraph(n, src, dst, np.ones(src.size), np.ones(n))


def fit_out_degree_slope(g: InfluenceGraph, min_degree: int = 2, bins_per_decade: int = 10) -> float:
    """Slope of the log-log out-degree histogram over degrees >= ``min_degree``.

    Counts are pooled into logarithmic bins and divided by the number of
    integer degrees in each bin, so sparse tails do not flatten the fit.
    """
    deg = g.out_degree[g.out_degree >= min_degree]
    if deg.size == 0:
        raise ValueError("no node reaches min_degree")
    hi = int(deg.max()) + 1
    n_bins = max(1, int(np.ceil(np.log10(hi / min_degree) * bins_per_decade)))
    edges = np.unique(np.round(np.geomspace(min_degree, hi, n_bins + 1)).astype(np.int64))
    if edges.size < 3:
        raise ValueError("not enough distinct degrees to fit a slope")
    counts, _ = np.histogram(deg, bins=edges)
    width = np.diff(edges)
    # representative degree: geometric mean of the integers a bin covers
    centre = np.sqrt(edges[:-1] * (edges[1:] - 1.0))
    keep = counts > 0
    if keep.sum() < 2:
        raise ValueError("not enough distinct degrees to fit a slope")
    slope, _ = np.polyfit(np.log10(centre[keep]), np.log10(counts[keep] / width[keep]), 1)
    return float(slope)
