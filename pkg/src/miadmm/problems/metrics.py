"""Regression quality metrics: MSE, MSLE, MAE, explained variance, R2."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class MetricDomainError(Exception):
    """MSLE is undefined for values <= -1 (log of a nonpositive number)."""


class RegressionMetrics(NamedTuple):
    mse: float
    msle: float
    mae: float
    ev: float
    r2: float


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    """Compute (MSE, MSLE, MAE, EV, R2) for a prediction vector.

    MSLE uses ``log(1 + value)``, so both vectors must be entry-wise > -1.
    EV is ``1 - Var(y - yhat)/Var(y)`` and R2 is ``1 - SSres/SStot``
    (population variances).
    """
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1 or y.size < 2:
        raise ValueError("y_true and y_pred must be equal-length vectors of size >= 2")
    err = y - p
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))
    if np.any(y <= -1.0) or np.any(p <= -1.0):
        raise MetricDomainError("MSLE requires all values > -1")
    log_err = np.log1p(y) - np.log1p(p)
    msle = float(np.mean(log_err * log_err))
    var_y = float(np.var(y))
    ev = 1.0 - float(np.var(err)) / var_y if var_y > 0.0 else 0.0
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(err * err)) / ss_tot if ss_tot > 0.0 else 0.0
    return RegressionMetrics(mse=mse, msle=msle, mae=mae, ev=ev, r2=r2)
