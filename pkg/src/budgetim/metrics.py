"""Accuracy of inferred activation probabilities against a ground truth."""

from __future__ import annotations

import math

import numpy as np

from .estimate import ActivationEstimate


def rmse(truth, inferred) -> float:
    """Root-mean-square error normalized by the mean ground-truth probability.

    ``sqrt(sum((p' - p)^2) / n) / (sum(p) / n)``.  Inputs are arrays of equal
    length or :class:`ActivationEstimate` objects over the same node set.
    """
    if isinstance(truth, ActivationEstimate) or isinstance(inferred, ActivationEstimate):
        if not (isinstance(truth, ActivationEstimate) and isinstance(inferred, ActivationEstimate)):
            raise TypeError("pass two estimates or two arrays")
        t, i = truth.as_dict(), inferred.as_dict()
        if set(t) != set(i):
            raise ValueError("truth and inferred cover different node sets")
        keys = sorted(t)
        p = np.array([t[k] for k in keys])
        q = np.array([i[k] for k in keys])
    else:
        p = np.asarray(truth, dtype=np.float64)
        q = np.asarray(inferred, dtype=np.float64)
        if p.shape != q.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    if p.size == 0:
        raise ValueError("empty node set")
    mean = p.sum() / p.size
    if mean == 0.0:
        raise ValueError("ground truth has zero mean; RMSE is undefined")
    return math.sqrt(float(((q - p) ** 2).sum()) / p.size) / mean
