"""Activation-probability inference on an influence DAG.

The DAG is read as a Bayesian network whose nodes are binary and whose
conditionals are noisy-OR: a non-seed node stays inactive with probability
``prod(1 - p(u, v))`` over its active parents.  Seeds are clamped active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dag import InfluenceDag
from .estimate import ActivationEstimate

MAX_EXACT_WIDTH = 20

__all__ = [
    "ActivationEstimate",
    "LbpConfig",
    "exact_dag_marginals",
    "spbp",
    "lbp",
    "estimate_dag",
    "cap_indegree",
]


def exact_dag_marginals(dag: InfluenceDag) -> ActivationEstimate:
    """Exact marginals of the DAG's noisy-OR network.

    The joint is summed out node by node in a topological order.  Only the
    "frontier" (processed non-seed nodes that still have unprocessed
    children) is kept as an explicit table over its ``2^w`` joint states, so
    the cost is exponential in the frontier width rather than the node count.
    Seeds are constant and never enter the table.
    """
    k = dag.n_nodes
    is_seed = dag.is_seed
    ptr, par, prob = dag.parent_csr
    ls, _ = dag.local_edges
    pending = np.bincount(ls, minlength=k)  # children not yet processed
    n_parents_left = np.diff(ptr).copy()
    children: list[list[int]] = [[] for _ in range(k)]
    for v in range(k):
        for j in range(ptr[v], ptr[v + 1]):
            children[par[j]].append(v)
    marg = np.zeros(k)
    marg[is_seed] = 1.0
    front: list[int] = []  # table axis i holds the state of front[i]
    table = np.ones(())

    ready = [v for v in range(k) if n_parents_left[v] == 0]
    while ready:
        # pick the ready node that keeps the frontier smallest; ties by topological position
        best, best_key = None, None
        for v in ready:
            closes = sum(
                1 for j in range(ptr[v], ptr[v + 1]) if not is_seed[par[j]] and pending[par[j]] == 1
            )
            grow = 1 if (pending[v] > 0 and not is_seed[v]) else 0
            key = (grow - closes, v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        v = best
        ready.remove(v)
        if not is_seed[v]:
            f = len(front)
            stay = np.ones((1,) * f)
            const = 1.0
            for j in range(ptr[v], ptr[v + 1]):
                u = par[j]
                if is_seed[u]:
                    const *= 1.0 - prob[j]
                else:
                    shape = [1] * f
                    shape[front.index(u)] = 2
                    stay = stay * np.array([1.0, 1.0 - prob[j]]).reshape(shape)
            stay = stay * const
            on = table * (1.0 - stay)
            marg[v] = float(on.sum())
            if pending[v] > 0:
                if f + 1 > MAX_EXACT_WIDTH:
                    raise ValueError(f"exact marginalization limited to a frontier of {MAX_EXACT_WIDTH} nodes")
                table = np.stack([table * stay, on], axis=-1)
                front.append(v)
        for j in range(ptr[v], ptr[v + 1]):
            u = par[j]
            pending[u] -= 1
            if not is_seed[u] and pending[u] == 0:
                axis = front.index(u)
                table = table.sum(axis=axis)
                front.pop(axis)
        for c in children[v]:
            n_parents_left[c] -= 1
            if n_parents_left[c] == 0:
                ready.append(c)
    np.clip(marg, 0.0, 1.0, out=marg)
    return ActivationEstimate(dag.nodes, marg, float(marg.sum()), "exact")


def spbp(dag: InfluenceDag) -> ActivationEstimate:
    """Single topological pass treating parent activations as independent."""
    ptr, par, prob = dag.parent_csr
    p, sigma, touched = _kernels.spbp_pass(ptr, par, prob, dag.is_seed)
    return ActivationEstimate(dag.nodes, p, float(sigma), "spbp", edge_visits=int(touched))


@dataclass(frozen=True)
class LbpConfig:
    max_iters: int = 100
    tol: float = 1e-6
    damping: float = 0.5
    indegree_cap: int | None = 10

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.indegree_cap is not None and self.indegree_cap < 1:
            raise ValueError("indegree_cap must be >= 1")


def cap_indegree(
    ptr: np.ndarray, par: np.ndarray, prob: np.ndarray, cap: int | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep at most ``cap`` parents per node, highest probability first (ties: lower parent)."""
    deg = np.diff(ptr)
    if cap is None or deg.size == 0 or deg.max() <= cap:
        return ptr, par, prob
    keep = np.ones(par.size, dtype=bool)
    for v in np.flatnonzero(deg > cap):
        lo, hi = ptr[v], ptr[v + 1]
        order = np.lexsort((par[lo:hi], -prob[lo:hi]))
        keep[lo + order[cap:]] = False
    new_ptr = np.zeros_like(ptr)
    np.cumsum(np.minimum(deg, cap), out=new_ptr[1:])
    return new_ptr, par[keep], prob[keep]


def lbp(dag: InfluenceDag, cfg: LbpConfig | None = None) -> ActivationEstimate:
    """Loopy sum-product on the DAG's noisy-OR factor graph.

    Factor-to-variable messages use the noisy-OR closed form, so each sweep is
    linear in the number of edges.  Non-convergence is reported through
    ``converged`` rather than raised.
    """
    cfg = cfg or LbpConfig()
    ptr, par, prob = cap_indegree(*dag.parent_csr, cfg.indegree_cap)
    k = dag.n_nodes
    # links grouped by parent
    order = np.argsort(par, kind="stable")
    ch_ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(par, minlength=k), out=ch_ptr[1:])
    belief, iters, converged = _kernels.lbp_noisy_or(
        ptr, par, prob, ch_ptr, order.astype(np.int64), dag.is_seed, cfg.max_iters, cfg.tol, cfg.damping
    )
    belief = np.clip(belief, 0.0, 1.0)
    belief[dag.is_seed] = 1.0
    return ActivationEstimate(
        dag.nodes, belief, float(belief.sum()), "lbp", converged=bool(converged), iterations=int(iters),
        edge_visits=int(par.size) * int(iters),
    )


def estimate_dag(dag: InfluenceDag, method: str = "spbp", lbp_cfg: LbpConfig | None = None) -> ActivationEstimate:
    if method == "spbp":
        return spbp(dag)
    if method == "lbp":
        return lbp(dag, lbp_cfg)
    if method == "exact":
        return exact_dag_marginals(dag)
    raise ValueError(f"unknown DAG estimator {method!r}")
