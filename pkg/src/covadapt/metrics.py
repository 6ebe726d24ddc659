"""Forecast accuracy metrics.

SMAPE uses the symmetric form 2/F * sum |y - yhat| / (|y| + |yhat|), bounded
in [0, 2]. Steps where both truth and prediction are zero contribute 0 under
the default convention; the zero-excluding variant instead drops every step
with zero truth from both sum and count, since a handful of zero truths can
dominate the symmetric form. MASE scales MAE by the in-sample seasonal-naive
MAE of the history.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateError, GeometryError

__all__ = ["mae", "mase", "rmse", "smape"]


def _pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise GeometryError("metrics need nonempty 1-d inputs")
    if t.shape != p.shape:
        raise GeometryError(f"length mismatch: truth {t.size}, pred {p.size}")
    return t, p


def mae(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return float(np.mean(np.abs(t - p)))


def rmse(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def smape(truth, pred, exclude_zero_truth: bool = False) -> float:
    t, p = _pair(truth, pred)
    if exclude_zero_truth:
        keep = t != 0.0
        if not keep.any():
            raise DegenerateError("every step has zero truth; SMAPE undefined")
        t, p = t[keep], p[keep]
    num = np.abs(t - p)
    den = np.abs(t) + np.abs(p)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(2.0 * terms.mean())


def mase(truth, pred, history, seasonality: int) -> float:
    t, p = _pair(truth, pred)
    h = np.asarray(history, dtype=float)
    if seasonality < 1:
        raise GeometryError(f"seasonality must be >= 1, got {seasonality}")
    if h.size <= seasonality:
        raise GeometryError(
            f"history length {h.size} must exceed seasonality {seasonality}"
        )
    scale = float(np.mean(np.abs(h[seasonality:] - h[:-seasonality])))
    if scale == 0.0:
        raise DegenerateError("seasonal-naive scale is 0; MASE undefined")
    return mae(t, p) / scale
