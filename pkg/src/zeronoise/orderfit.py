"""Least-squares order fitting for convergence data.

Quantifies "metric = O(eps^p)" claims: fit log(metric) against log(eps) and
report the global slope, the intercept, and the slope of each consecutive
interval. Nonpositive metrics carry no order information on a log scale and
are excluded with a flag rather than silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, ValidationError


@dataclass(frozen=True)
class OrderFit:
    slope: float
    intercept: float
    interval_slopes: np.ndarray
    excluded: np.ndarray  # True where the metric was nonpositive and skipped
    n_used: int


def fit_order(pairs: Sequence[tuple[float, float]]) -> OrderFit:
    """Fit log(metric) = slope*log(eps) + intercept by least squares.

    ``pairs`` is a sequence of (eps, metric). Requires at least three pairs
    with metric > 0; eps must be positive throughout.
    """
    arr = np.asarray(list(pairs), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("fit_order expects a sequence of (eps, metric) pairs")
    eps, metric = arr[:, 0], arr[:, 1]
    if np.any(eps <= 0) or not np.all(np.isfinite(eps)):
        raise ValidationError("eps values must be positive and finite")
    excluded = ~(metric > 0) | ~np.isfinite(metric)
    if (~excluded).sum() < 3:
        raise InsufficientDataError(
            f"need at least 3 positive metrics to fit an order, "
            f"got {(~excluded).sum()} of {len(metric)}"
        )
    le = np.log(eps[~excluded])
    lm = np.log(metric[~excluded])
    slope, intercept = np.polyfit(le, lm, 1)
    interval = np.diff(lm) / np.diff(le)
    return OrderFit(
        slope=float(slope),
        intercept=float(intercept),
        interval_slopes=interval,
        excluded=excluded,
        n_used=int((~excluded).sum()),
    )
