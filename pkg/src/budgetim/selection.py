"""Seed selection under a node-cost budget.

``naive_greedy`` repeatedly takes the best spread-per-cost node that still
fits the budget.  ``improved_greedy`` returns the better of that set and the
single best affordable node, which is what carries the ``1 - 1/sqrt(e)``
guarantee.  ``optimized_select`` is the same scheme driven by per-node MIOA
regions: after each pick only the new seed's peers are re-evaluated, and a
peer is skipped once its previous ratio cannot beat the best fresh one.
"""

from __future__ import annotations

import csv
import heapq
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dag import build_dag, build_dag2
from .diffusion import DEFAULT_ROUNDS, MAX_EXACT_EDGES, LiveEdgeOracle, mc_sigma
from .graph import InfluenceGraph
from .region import DEFAULT_THETA, MioaForest, PeerSeedsIndex, build_peer_seeds
from .spread import LbpConfig, estimate_dag

log = logging.getLogger(__name__)

ESTIMATORS = ("spbp", "lbp", "mc", "exact")
DAG_MODELS = ("dag1", "dag2")
TIE_TOL = 1e-12
CSV_HEADER = "# budgetim-selection v1"
CSV_COLUMNS = ("round", "node", "cost", "cumulative_cost", "delta", "reevals")


@dataclass(frozen=True)
class SelectionConfig:
    """Either ``budget`` (costs taken from the graph) or ``k`` (unit costs, budget k)."""

    budget: float | None = None
    k: int | None = None
    theta: float = DEFAULT_THETA
    estimator: str = "spbp"
    dag_model: str = "dag2"
    lazy: bool = True
    mc_rounds: int = 1000
    final_mc_rounds: int = DEFAULT_ROUNDS
    rng_seed: int = 0
    lbp: LbpConfig = field(default_factory=LbpConfig)

    def __post_init__(self) -> None:
        if (self.budget is None) == (self.k is None):
            raise ValueError("set exactly one of budget and k")
        if self.budget is not None and not (self.budget > 0 and math.isfinite(self.budget)):
            raise ValueError(f"budget must be a positive number, got {self.budget}")
        if self.k is not None and (int(self.k) != self.k or self.k < 1):
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.dag_model not in DAG_MODELS:
            raise ValueError(f"unknown DAG model {self.dag_model!r}; choose from {DAG_MODELS}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.mc_rounds < 1 or self.final_mc_rounds < 0:
            raise ValueError("mc_rounds must be >= 1 and final_mc_rounds >= 0")

    @property
    def unit_cost(self) -> bool:
        return self.k is not None

    @property
    def limit(self) -> float:
        return float(self.k) if self.k is not None else float(self.budget)

    def costs(self, g: InfluenceGraph) -> np.ndarray:
        return np.ones(g.n) if self.unit_cost else np.asarray(g.cost, dtype=np.float64)


@dataclass(frozen=True)
class TraceRow:
    round: int
    node: int
    cost: float
    cumulative_cost: float
    delta: float
    reevals: int
    reevaluated: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class SelectionResult:
    algorithm: str
    seeds: tuple[int, ...]
    total_cost: float
    sigma_est: float  # MC-evaluated unless the estimator was exact
    sigma_model: float  # value under the selection estimator
    trace: tuple[TraceRow, ...]
    chosen_branch: str  # "S1" or "s_max"
    s1: tuple[int, ...] = ()
    s1_sigma: float = float("nan")
    s_max: int | None = None
    s_max_sigma: float = float("nan")
    evaluations: int = 0
    runtime: float = 0.0

    @property
    def reevals(self) -> int:
        return sum(r.reevals for r in self.trace)


class SpreadEvaluator:
    """``sigma(S)`` under one estimator, counting calls.

    ``exact`` and ``mc`` work on the whole graph; ``spbp`` and ``lbp`` run on
    the DAG the configured model builds for ``S``.
    """

    def __init__(self, g: InfluenceGraph, cfg: SelectionConfig, forest: MioaForest | None = None):
        self.g = g
        self.cfg = cfg
        self.calls = 0
        self._forest = forest
        self._oracle = None
        if cfg.estimator == "exact":
            if g.m > MAX_EXACT_EDGES:
                raise ValueError(f"exact estimator limited to {MAX_EXACT_EDGES} edges, graph has {g.m}")
            self._oracle = LiveEdgeOracle(g)

    @property
    def forest(self) -> MioaForest:
        if self._forest is None:
            self._forest = MioaForest(self.g, self.cfg.theta)
        return self._forest

    def __call__(self, seeds: Sequence[int]) -> float:
        if len(seeds) == 0:
            return 0.0
        self.calls += 1
        cfg = self.cfg
        if cfg.estimator == "exact":
            return self._oracle.spread(seeds)
        if cfg.estimator == "mc":
            return mc_sigma(self.g, seeds, cfg.mc_rounds, cfg.rng_seed)
        trees = self.forest if cfg.dag_model == "dag2" else None
        dag = build_dag(self.g, seeds, cfg.dag_model, cfg.theta, trees)
        return estimate_dag(dag, cfg.estimator, cfg.lbp).sigma

    def region_sigma(self, v: int) -> float:
        """``sigma(v)`` on ``v``'s own MIOA tree (exact/mc fall back to the graph)."""
        if self.cfg.estimator in ("exact", "mc"):
            return self([v])
        self.calls += 1
        dag = build_dag2(self.g, [v], self.forest, self.cfg.theta)
        return estimate_dag(dag, self.cfg.estimator, self.cfg.lbp).sigma


def delta(
    g: InfluenceGraph,
    seeds: Sequence[int],
    v: int,
    cfg: SelectionConfig,
    evaluator: SpreadEvaluator | None = None,
) -> float:
    """``(sigma(S + v) - sigma(S)) / c(v)`` under ``cfg``'s estimator and cost mode."""
    if v in set(seeds):
        raise ValueError(f"{v} is already a seed")
    ev = evaluator or SpreadEvaluator(g, cfg)
    base = list(seeds)
    return (ev(base + [v]) - ev(base)) / float(cfg.costs(g)[v])


def _final_seed(rng_seed: int) -> int:
    # separate stream so the reported spread is not scored on the selection's own samples
    return int(np.random.SeedSequence([rng_seed, 2]).generate_state(1, np.uint64)[0])


def _finish(g: InfluenceGraph, cfg: SelectionConfig, res: SelectionResult) -> SelectionResult:
    if cfg.estimator == "exact" and not math.isnan(res.sigma_model):
        return replace(res, sigma_est=res.sigma_model)
    if cfg.final_mc_rounds == 0 or not res.seeds:
        return replace(res, sigma_est=res.sigma_model if res.seeds else 0.0)
    return replace(res, sigma_est=mc_sigma(g, res.seeds, cfg.final_mc_rounds, _final_seed(cfg.rng_seed)))


def _feasible(costs: np.ndarray, limit: float) -> np.ndarray:
    return np.flatnonzero(costs <= limit)


def _argmax_single(singles: dict[int, float]) -> int | None:
    best, best_v = -math.inf, None
    for v in sorted(singles):
        if singles[v] > best:
            best, best_v = singles[v], v
    return best_v


def _greedy_s1(g: InfluenceGraph, cfg: SelectionConfig, ev: SpreadEvaluator):
    """Naive greedy loop; returns (seeds, trace, sigma, first-round singleton spreads)."""
    costs = cfg.costs(g)
    limit = cfg.limit
    cand = [int(v) for v in _feasible(costs, limit)]
    singles: dict[int, float] = {}
    seeds: list[int] = []
    trace: list[TraceRow] = []
    cum = 0.0
    sigma = 0.0

    if not cfg.lazy:
        alive = set(cand)
        first = True
        while alive:
            evaluated = []
            best, best_v, best_sig = -math.inf, -1, 0.0
            for v in sorted(alive):
                s = ev(seeds + [v])
                evaluated.append(v)
                if first:
                    singles[v] = s
                d = (s - sigma) / costs[v]
                if d > best:
                    best, best_v, best_sig = d, v, s
            first = False
            alive.discard(best_v)
            # rejected picks only shrink the candidate set; nothing to record
            if cum + costs[best_v] <= limit:
                seeds.append(best_v)
                cum += float(costs[best_v])
                sigma = best_sig
                trace.append(TraceRow(len(seeds), best_v, float(costs[best_v]), cum, best, len(evaluated), tuple(evaluated)))
                alive = {v for v in alive if cum + costs[v] <= limit}
        return seeds, trace, sigma, singles

    # CELF: heap of (-delta, node, round the delta was computed in, sigma(S + node))
    heap = []
    for v in cand:
        s = ev([v])
        singles[v] = s
        heap.append((-s / costs[v], v, 0, s))
    heapq.heapify(heap)
    rnd = 0
    evaluated: list[int] = list(cand)
    while heap:
        negd, v, stamp, s = heapq.heappop(heap)
        if cum + costs[v] > limit:
            continue
        if stamp != rnd:
            s = ev(seeds + [v])
            evaluated.append(v)
            heapq.heappush(heap, (-(s - sigma) / costs[v], v, rnd, s))
            continue
        # refresh stale entries that tie with the fresh top within tolerance
        near = []
        while heap and -heap[0][0] >= -negd - TIE_TOL:
            near.append(heapq.heappop(heap))
        stale = False
        for e in near:
            if e[2] != rnd and cum + costs[e[1]] <= limit:
                s2 = ev(seeds + [e[1]])
                evaluated.append(e[1])
                heapq.heappush(heap, (-(s2 - sigma) / costs[e[1]], e[1], rnd, s2))
                stale = True
            else:
                heapq.heappush(heap, e)
        if stale:
            heapq.heappush(heap, (negd, v, stamp, s))
            continue
        seeds.append(v)
        cum += float(costs[v])
        sigma = s
        trace.append(TraceRow(len(seeds), v, float(costs[v]), cum, -negd, len(evaluated), tuple(evaluated)))
        evaluated = []
        rnd += 1
    return seeds, trace, sigma, singles


def naive_greedy(g: InfluenceGraph, cfg: SelectionConfig, evaluator: SpreadEvaluator | None = None) -> SelectionResult:
    """Best ratio first, skipping nodes that no longer fit, until no candidate is left."""
    t0 = time.perf_counter()
    ev = evaluator or SpreadEvaluator(g, cfg)
    seeds, trace, sigma, _ = _greedy_s1(g, cfg, ev)
    res = SelectionResult(
        "naive", tuple(seeds), trace[-1].cumulative_cost if trace else 0.0, float("nan"), sigma, tuple(trace),
        "S1", s1=tuple(seeds), s1_sigma=sigma, evaluations=ev.calls, runtime=time.perf_counter() - t0,
    )
    return _finish(g, cfg, res)


def _pick_branch(
    algorithm: str,
    costs: np.ndarray,
    s1: list[int],
    trace: list[TraceRow],
    sigma1: float,
    s_max: int | None,
    sigma_max: float,
    calls: int,
    t0: float,
) -> SelectionResult:
    cost1 = trace[-1].cumulative_cost if trace else 0.0
    common = dict(s1=tuple(s1), s1_sigma=sigma1, s_max=s_max, s_max_sigma=sigma_max, evaluations=calls)
    if s_max is not None and sigma_max > sigma1:
        c = float(costs[s_max])
        row = TraceRow(1, s_max, c, c, sigma_max / c, 0)
        return SelectionResult(
            algorithm, (s_max,), c, float("nan"), sigma_max, (row,), "s_max", runtime=time.perf_counter() - t0, **common
        )
    return SelectionResult(
        algorithm, tuple(s1), cost1, float("nan"), sigma1, tuple(trace), "S1", runtime=time.perf_counter() - t0, **common
    )


def improved_greedy(g: InfluenceGraph, cfg: SelectionConfig, evaluator: SpreadEvaluator | None = None) -> SelectionResult:
    """The better of the naive greedy set and the best single affordable node."""
    t0 = time.perf_counter()
    ev = evaluator or SpreadEvaluator(g, cfg)
    seeds, trace, sigma, singles = _greedy_s1(g, cfg, ev)
    s_max = _argmax_single(singles)
    sigma_max = singles[s_max] if s_max is not None else float("nan")
    res = _pick_branch("improved", cfg.costs(g), seeds, trace, sigma, s_max, sigma_max, ev.calls, t0)
    return _finish(g, cfg, res)


def weighted_degree(g: InfluenceGraph, cfg: SelectionConfig) -> SelectionResult:
    """Rank by total outgoing probability; top-k, or packed greedily by weight/cost under the budget."""
    t0 = time.perf_counter()
    costs = cfg.costs(g)
    limit = cfg.limit
    w = np.bincount(g.src, weights=g.prob, minlength=g.n).astype(np.float64)
    key = w / costs
    order = np.lexsort((np.arange(g.n), -key))
    seeds: list[int] = []
    trace: list[TraceRow] = []
    cum = 0.0
    for v in order.tolist():
        if cum + costs[v] <= limit:
            cum += float(costs[v])
            seeds.append(v)
            trace.append(TraceRow(len(seeds), v, float(costs[v]), cum, float(key[v]), 0))
    res = SelectionResult(
        "wdeg", tuple(seeds), cum, float("nan"), float("nan"), tuple(trace), "S1", s1=tuple(seeds),
        runtime=time.perf_counter() - t0,
    )
    return _finish(g, cfg, res)


def optimized_select(
    g: InfluenceGraph,
    cfg: SelectionConfig,
    forest: MioaForest | None = None,
    ps_index: PeerSeedsIndex | None = None,
    evaluator: SpreadEvaluator | None = None,
) -> SelectionResult:
    """Greedy selection localized to MIOA regions with Peer-Seeds re-evaluation.

    Initial ratios come from each node's own MIOA tree.  After a pick ``u``,
    only ``PS(u)`` minus the seeds is revisited, in decreasing order of the
    previous ratio; with ``lazy`` the sweep stops at the first node whose
    previous ratio cannot exceed the best ratio recomputed so far.  A skipped
    node is only deferred: if it later reaches the top it is first recomputed
    against the seeds of the round it was skipped in, which is the value the
    non-lazy sweep would hold.  Candidates that no longer fit the remaining
    budget are dropped before the sweep.
    """
    t0 = time.perf_counter()
    if forest is None:
        forest = evaluator.forest if evaluator is not None else MioaForest(g, cfg.theta)
    if forest.theta != cfg.theta:
        raise ValueError(f"MIOA cache built with theta={forest.theta}, config asks for {cfg.theta}")
    if ps_index is None:
        ps_index = build_peer_seeds(forest, cfg.theta)
    elif ps_index.theta != cfg.theta:
        raise ValueError(f"Peer Seeds index built with theta={ps_index.theta}, config asks for {cfg.theta}")
    ev = evaluator or SpreadEvaluator(g, cfg, forest)

    costs = cfg.costs(g)
    limit = cfg.limit
    n = g.n
    alive = np.zeros(n, dtype=bool)
    alive[_feasible(costs, limit)] = True

    sigma_v = np.full(n, -math.inf)
    for v in np.flatnonzero(alive).tolist():
        sigma_v[v] = ev.region_sigma(v)
    dlt = np.where(alive, sigma_v / costs, -math.inf)
    s_max = int(np.argmax(sigma_v)) if alive.any() else None
    sigma_max = float(sigma_v[s_max]) if s_max is not None else float("nan")

    seeds: list[int] = []
    trace: list[TraceRow] = []
    cum = 0.0
    sigma0 = 0.0
    sigma_hist = [0.0]  # sigma of each seed prefix
    pending = np.full(n, -1, dtype=np.int64)  # prefix length a skipped node is owed
    late = 0
    while alive.any():
        while True:
            masked = np.where(alive, dlt, -math.inf)
            u = int(np.argmax(masked))  # first maximum, so ties go to the lower id
            owed = np.flatnonzero(alive & (pending >= 0) & (masked >= masked[u] - TIE_TOL))
            if owed.size == 0:
                break
            for v in owed.tolist():
                t = int(pending[v])
                dlt[v] = (ev(seeds[:t] + [v]) - sigma_hist[t]) / costs[v]
                pending[v] = -1
                late += 1
        alive[u] = False
        if cum + costs[u] > limit:
            continue
        picked_delta = float(dlt[u])
        seeds.append(u)
        cum += float(costs[u])
        sigma0 = ev(seeds)
        sigma_hist.append(sigma0)
        alive &= cum + costs <= limit
        peers = ps_index.peers(u)
        peers = peers[alive[peers]]
        old = dlt[peers]
        order = np.lexsort((peers, -old))
        best = 0.0
        redone: list[int] = []
        for pos, i in enumerate(order.tolist()):
            v = int(peers[i])
            if cfg.lazy and not old[i] > best - TIE_TOL:
                pending[peers[order[pos:]]] = len(seeds)
                break
            s = ev(seeds + [v])
            dlt[v] = (s - sigma0) / costs[v]
            pending[v] = -1
            redone.append(v)
            if dlt[v] > best:
                best = float(dlt[v])
        trace.append(TraceRow(len(seeds), u, float(costs[u]), cum, picked_delta, len(redone) + late, tuple(redone)))
        late = 0
        if cum >= limit:
            break

    res = _pick_branch(
        f"optimized-{cfg.dag_model}-{cfg.estimator}", costs, seeds, trace, sigma0 if seeds else 0.0,
        s_max, sigma_max, ev.calls, t0,
    )
    return _finish(g, cfg, res)


def write_selection_csv(res: SelectionResult, path: str | Path, labels: np.ndarray | None = None) -> None:
    lab = (lambda x: int(x)) if labels is None else (lambda x: int(labels[x]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            f"{CSV_HEADER} algorithm={res.algorithm} branch={res.chosen_branch} "
            f"sigma_est={float(res.sigma_est)!r} total_cost={float(res.total_cost)!r}\n"
        )
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in res.trace:
            w.writerow([r.round, lab(r.node), repr(float(r.cost)), repr(float(r.cumulative_cost)), repr(float(r.delta)), r.reevals])


def read_selection_csv(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith(CSV_HEADER):
            raise ValueError(f"{path}: missing '{CSV_HEADER}' header")
        return [
            {
                "round": int(r["round"]),
                "node": int(r["node"]),
                "cost": float(r["cost"]),
                "cumulative_cost": float(r["cumulative_cost"]),
                "delta": float(r["delta"]),
                "reevals": int(r["reevals"]),
            }
            for r in csv.DictReader(fh)
        ]


def select(g: InfluenceGraph, algorithm: str, cfg: SelectionConfig) -> SelectionResult:
    """Dispatch by name: naive, improved, optimized, wdeg."""
    if algorithm == "naive":
        return naive_greedy(g, cfg)
    if algorithm == "improved":
        return improved_greedy(g, cfg)
    if algorithm == "optimized":
        return optimized_select(g, cfg)
    if algorithm == "wdeg":
        return weighted_degree(g, cfg)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from naive, improved, optimized, wdeg")
