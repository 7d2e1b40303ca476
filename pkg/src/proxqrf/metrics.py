"""Evaluation metrics: pinball (quantile) loss, MSE, MAPE, MAE.

MAPE is a fraction here; reports render it as percent.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError


def _aligned(y, other, name: str):
    y = np.asarray(y, dtype=np.float64)
    other = np.asarray(other, dtype=np.float64)
    if y.shape != other.shape or y.ndim != 1:
        raise ValueError(
            f"{name}: shapes {y.shape} and {other.shape} do not align")
    if y.size == 0:
        raise ValueError(f"{name}: empty input")
    return y, other


def pinball_loss(y, q, alpha: float) -> float:
    """Mean quantile loss: alpha*(y-q) above the estimate, (1-alpha)*(q-y) below.

    Parameters
    ----------
    y : array-like
        True values.
    q : array-like
        Estimated alpha-quantiles, aligned with y.
    alpha : float in (0, 1)
        Quantile level.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    y, q = _aligned(y, q, "pinball_loss")
    diff = y - q
    loss = np.where(diff > 0, alpha * diff, (alpha - 1.0) * diff)
    return float(np.mean(loss))


def mse(y, y_hat) -> float:
    """Mean squared error."""
    y, y_hat = _aligned(y, y_hat, "mse")
    return float(np.mean((y - y_hat) ** 2))


def mae(y, y_hat) -> float:
    """Mean absolute error."""
    y, y_hat = _aligned(y, y_hat, "mae")
    return float(np.mean(np.abs(y - y_hat)))


def mape(y, y_hat) -> float:
    """Mean absolute percentage error, as a fraction.

    Raises
    ------
    NumericError
        If any true value is zero (relative error undefined).
    """
    y, y_hat = _aligned(y, y_hat, "mape")
    if np.any(y == 0):
        raise NumericError("mape undefined: true value of 0 encountered")
    return float(np.mean(np.abs((y - y_hat) / y)))
