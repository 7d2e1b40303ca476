"""Weighted empirical CDFs, quantiles, and prediction intervals.

A weight row over the training targets defines a step CDF; quantiles are
its generalized inverse, inf{y : F(y) >= alpha}, evaluated on the support
of distinct target values (no interpolation). All requested quantiles for
one query invert the same CDF, so they can never cross.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .forest import Forest
from .proximity import scheme_matrix

WEIGHT_SUM_TOL = 1e-8


@dataclass(frozen=True)
class WeightedEmpirical:
    """Step CDF: strictly increasing support with cumulative weights."""

    support: np.ndarray
    cum_weight: np.ndarray

    def __post_init__(self):
        support = np.ascontiguousarray(self.support, dtype=np.float64)
        cum = np.ascontiguousarray(self.cum_weight, dtype=np.float64)
        if support.ndim != 1 or support.size == 0:
            raise ValueError("support must be a nonempty vector")
        if cum.shape != support.shape:
            raise ValueError("cum_weight must align with support")
        if support.size > 1 and not np.all(np.diff(support) > 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(cum) < 0) or cum[0] < 0:
            raise ValueError("cum_weight must be nondecreasing from >= 0")
        if abs(cum[-1] - 1.0) > 1e-12:
            raise ValueError(f"cum_weight must end at 1, got {cum[-1]!r}")
        support.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum_weight", cum)


def build_empirical(weights, targets) -> WeightedEmpirical:
    """Merge duplicate targets and accumulate weights in sorted order.

    Parameters
    ----------
    weights : array-like
        Nonnegative weight row summing to 1 (within 1e-8).
    targets : array-like
        Training target values aligned with the weights.
    """
    w = np.asarray(weights, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if w.ndim != 1 or w.shape != y.shape:
        raise ValueError(f"weights {w.shape} do not align with targets {y.shape}")
    if w.size == 0:
        raise ValueError("empty weight row")
    if not np.isfinite(w).all() or w.min() < 0:
        raise ValueError("weights must be finite and nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weight row sums to {total!r}, not 1 "
                         "(undefined or unnormalized row)")
    support, inverse = np.unique(y, return_inverse=True)
    merged = np.bincount(inverse, weights=w, minlength=support.size)
    cum = np.cumsum(merged)
    # dividing by its own last entry pins the final value to exactly 1
    cum /= cum[-1]
    return WeightedEmpirical(support, cum)


def cdf_at(emp: WeightedEmpirical, y: float) -> float:
    """P(Y <= y): right-continuous step function value."""
    pos = int(np.searchsorted(emp.support, y, side="right"))
    if pos == 0:
        return 0.0
    return float(emp.cum_weight[pos - 1])


def quantile_at(emp: WeightedEmpirical, alpha: float) -> float:
    """Smallest support value whose cumulative weight reaches alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    pos = int(np.searchsorted(emp.cum_weight, alpha, side="left"))
    return float(emp.support[min(pos, emp.support.size - 1)])


def quantiles_at(emp: WeightedEmpirical, alphas) -> np.ndarray:
    """quantile_at evaluated over a vector of levels."""
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size and not ((alphas > 0) & (alphas < 1)).all():
        raise ValueError("all levels must be in (0, 1)")
    pos = np.searchsorted(emp.cum_weight, alphas, side="left")
    return emp.support[np.minimum(pos, emp.support.size - 1)]


@dataclass(frozen=True)
class QuantileEstimate:
    """Per-query quantile values over strictly increasing levels."""

    alphas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        alphas = np.ascontiguousarray(self.alphas, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if alphas.ndim != 1 or alphas.size == 0:
            raise ValueError("alphas must be a nonempty vector")
        if values.shape != alphas.shape:
            raise ValueError("values must align with alphas")
        if not ((alphas > 0) & (alphas < 1)).all():
            raise ValueError("levels must be in (0, 1)")
        if alphas.size > 1 and not np.all(np.diff(alphas) > 0):
            raise ValueError("levels must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise ValueError("quantile values cross")
        alphas.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "values", values)

    def at(self, alpha: float) -> float:
        """Value at an exactly-requested level."""
        hit = np.flatnonzero(self.alphas == alpha)
        if hit.size == 0:
            raise ValueError(f"level {alpha} was not estimated")
        return float(self.values[hit[0]])


@dataclass(frozen=True)
class PredictionInterval:
    """Central interval from one conditional CDF."""

    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("interval bounds out of order")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def predict_quantiles(forest: Forest, data: Dataset, queries, scheme: str,
                      alphas) -> list:
    """Quantile estimates for m query rows under one weighting scheme.

    Returns a list with one QuantileEstimate per query, or None where the
    scheme's weight row is undefined (flagged, never fabricated).
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ValueError("alphas must be a nonempty vector")
    if not ((alphas > 0) & (alphas < 1)).all():
        raise ValueError("levels must be in (0, 1)")
    if alphas.size > 1 and not np.all(np.diff(alphas) > 0):
        raise ValueError("levels must be strictly increasing")
    matrix = scheme_matrix(forest, data, queries, scheme)
    out = []
    for i in range(matrix.m):
        if not matrix.defined[i]:
            out.append(None)
            continue
        emp = build_empirical(matrix.weights[i], data.target)
        out.append(QuantileEstimate(alphas, quantiles_at(emp, alphas)))
    return out


def prediction_interval(estimate: QuantileEstimate, alpha_lo: float,
                        alpha_hi: float) -> PredictionInterval:
    """Interval (Q_lo, Q_hi) from levels already present in the estimate."""
    if not alpha_lo < alpha_hi:
        raise ValueError("alpha_lo must be below alpha_hi")
    return PredictionInterval(lower=estimate.at(alpha_lo),
                              upper=estimate.at(alpha_hi),
                              level=alpha_hi - alpha_lo)


def coverage(intervals, y_true) -> float:
    """Fraction of true values inside their intervals."""
    y = np.asarray(y_true, dtype=np.float64)
    if len(intervals) != y.size:
        raise ValueError(
            f"{len(intervals)} intervals for {y.size} true values")
    if y.size == 0:
        raise ValueError("coverage of empty input is undefined")
    inside = [iv.contains(v) for iv, v in zip(intervals, y)]
    return float(np.mean(inside))
