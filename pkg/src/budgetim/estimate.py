from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ActivationEstimate:
    """Per-node activation probabilities and their total (the spread).

    ``nodes[i]`` is the graph node whose probability is ``probs[i]``; nodes not
    listed have probability 0.  ``iterations``/``converged`` are only
    meaningful for loopy BP; ``edge_visits`` counts parent-edge touches.
    """

    nodes: np.ndarray
    probs: np.ndarray
    sigma: float
    method: str
    converged: bool = True
    iterations: int = 0
    edge_visits: int = 0

    def as_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.nodes] = self.probs
        return out

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.nodes.tolist(), self.probs.tolist()))

    def sigma_over(self, nodes) -> float:
        """Sum of probabilities over ``nodes``, accumulated in this estimate's order."""
        want = set(int(v) for v in nodes)
        total = 0.0
        for v, p in zip(self.nodes.tolist(), self.probs.tolist()):
            if v in want:
                total += p
        return total
