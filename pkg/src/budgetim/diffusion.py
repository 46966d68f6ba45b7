"""Ground-truth spread: Monte-Carlo IC simulation and exact live-edge enumeration."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .estimate import ActivationEstimate
from .graph import InfluenceGraph

log = logging.getLogger(__name__)

DEFAULT_ROUNDS = 10_000
MAX_EXACT_EDGES = 24
_CACHE_LIMIT = 1 << 24  # worlds x active nodes kept in memory


@dataclass(frozen=True, eq=False)
class SpreadSample:
    sigma_hat: float
    stderr: float
    rounds: int
    activation_freq: np.ndarray
    empty_seeds: bool = False


def _seed_array(g: InfluenceGraph, seeds: Iterable[int]) -> np.ndarray:
    s = np.unique(np.fromiter((int(x) for x in seeds), dtype=np.int64))
    if s.size and (s[0] < 0 or s[-1] >= g.n):
        bad = s[(s < 0) | (s >= g.n)][0]
        raise ValueError(f"unknown node id {bad}")
    return s


def _run(g: InfluenceGraph, seeds: np.ndarray, rounds: int, rng_seed: int, want_freq: bool):
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    counts = np.zeros(g.n if want_freq else 0)
    per_round = _kernels.ic_rounds(
        g.out_ptr, g.out_dst, g.out_prob, g.out_eid, seeds, rounds, np.uint64(rng_seed & (2**64 - 1)), 0, counts
    )
    return per_round, counts


def mc_spread(
    g: InfluenceGraph,
    seeds: Iterable[int],
    rounds: int = DEFAULT_ROUNDS,
    rng_seed: int = 0,
) -> SpreadSample:
    """Mean activated count over ``rounds`` independent cascades.

    Round ``r`` uses its own coin stream derived from ``(rng_seed, r)``, so for a
    fixed seed every call samples the same live-edge worlds.
    """
    s = _seed_array(g, seeds)
    if s.size == 0:
        warnings.warn("mc_spread called with an empty seed set", RuntimeWarning, stacklevel=2)
        return SpreadSample(0.0, 0.0, max(int(rounds), 1), np.zeros(g.n), empty_seeds=True)
    per_round, counts = _run(g, s, int(rounds), rng_seed, True)
    sigma = float(per_round.mean())
    stderr = float(per_round.std(ddof=1) / math.sqrt(rounds)) if rounds > 1 else 0.0
    return SpreadSample(sigma, stderr, int(rounds), counts / rounds)


def mc_sigma(g: InfluenceGraph, seeds: Iterable[int], rounds: int = DEFAULT_ROUNDS, rng_seed: int = 0) -> float:
    """Like :func:`mc_spread` but returns only the mean (no per-node counts)."""
    s = _seed_array(g, seeds)
    if s.size == 0:
        return 0.0
    per_round, _ = _run(g, s, int(rounds), rng_seed, False)
    return float(per_round.mean())


def mc_activation_probs(
    g: InfluenceGraph,
    seeds: Iterable[int],
    rounds: int = DEFAULT_ROUNDS,
    rng_seed: int = 0,
) -> ActivationEstimate:
    sample = mc_spread(g, seeds, rounds, rng_seed)
    return ActivationEstimate(
        np.arange(g.n), sample.activation_freq, float(sample.activation_freq.sum()), "mc", iterations=sample.rounds
    )


class LiveEdgeOracle:
    """Exact spread by summing over all 2^m live-edge worlds.

    Reachability masks per world are computed once and reused for every seed
    set queried, which makes exhaustive subset searches on tiny graphs cheap.
    """

    def __init__(self, g: InfluenceGraph):
        if g.m > MAX_EXACT_EDGES:
            raise ValueError(f"exact enumeration limited to {MAX_EXACT_EDGES} edges, graph has {g.m}")
        self.g = g
        active = np.unique(np.concatenate([g.src, g.dst]))
        self.active = active
        self.bit = np.full(g.n, -1, dtype=np.int64)
        self.bit[active] = np.arange(active.size)
        self.worlds = 1 << g.m
        self._cached = self.worlds * max(active.size, 1) <= _CACHE_LIMIT
        self._chunks = None
        if self._cached:
            self._chunks = [self._chunk(0, self.worlds)]

    def _chunk(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        g = self.g
        w = np.arange(lo, hi, dtype=np.int64)
        live = ((w[:, None] >> np.arange(g.m)) & 1).astype(bool)
        weight = np.prod(np.where(live, g.prob, 1.0 - g.prob), axis=1) if g.m else np.ones(w.size)
        k = self.active.size
        reach = np.broadcast_to(np.uint64(1) << np.arange(k, dtype=np.uint64), (w.size, k)).copy()
        bu = self.bit[g.src]
        bv = self.bit[g.dst]
        zero = np.uint64(0)
        for _ in range(k):
            before = reach.copy()
            for e in range(g.m):
                reach[:, bu[e]] |= np.where(live[:, e], reach[:, bv[e]], zero)
            if np.array_equal(before, reach):
                break
        return reach, weight

    def _iter_chunks(self):
        if self._cached:
            yield from self._chunks
            return
        step = max(1, _CACHE_LIMIT // max(self.active.size, 1))
        for lo in range(0, self.worlds, step):
            yield self._chunk(lo, min(self.worlds, lo + step))

    def _split(self, seeds: Iterable[int]) -> tuple[list[int], int]:
        s = _seed_array(self.g, seeds)
        inside = [int(self.bit[x]) for x in s if self.bit[x] >= 0]
        return inside, int(s.size - len(inside))

    def spread(self, seeds: Iterable[int]) -> float:
        inside, outside = self._split(seeds)
        if not inside:
            return float(outside)
        total = 0.0
        for reach, weight in self._iter_chunks():
            mask = np.bitwise_or.reduce(reach[:, inside], axis=1)
            total += float(np.bitwise_count(mask).astype(np.float64) @ weight)
        return total + outside

    def estimate(self, seeds: Iterable[int]) -> ActivationEstimate:
        g = self.g
        s = _seed_array(g, seeds)
        inside, _ = self._split(s)
        probs = np.zeros(g.n)
        probs[s] = 1.0
        if inside:
            acc = np.zeros(self.active.size)
            for reach, weight in self._iter_chunks():
                mask = np.bitwise_or.reduce(reach[:, inside], axis=1)
                for i in range(self.active.size):
                    acc[i] += float(((mask >> np.uint64(i)) & np.uint64(1)).astype(np.float64) @ weight)
            probs[self.active] = np.maximum(acc, probs[self.active])
            probs[s] = 1.0
        return ActivationEstimate(np.arange(g.n), probs, float(probs.sum()), "exact")


def exact_spread(g: InfluenceGraph, seeds: Iterable[int]) -> ActivationEstimate:
    """Exact activation probabilities for graphs with at most 24 edges."""
    return LiveEdgeOracle(g).estimate(seeds)
