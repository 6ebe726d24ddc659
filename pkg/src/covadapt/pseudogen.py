"""Stage I: the pseudo-forecast generator.

A Bayesian Ridge regressor is trained on a handful of oracle-labeled windows
to imitate the base forecaster, then queried over the whole history and the
horizon. Rows are (value, lag vector, position encoding); the value feature is
the true series over history and the oracle's horizon forecast beyond it, with
lag vectors crossing the boundary stitched from both.

The fit follows the evidence approximation: weight precision (lam) and noise
precision (alpha) are re-estimated from the effective number of parameters
until they stop moving. Inputs and target are standardized internally and
constant feature columns are dropped; predictions come back in original units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TaskSpec
from .errors import GeometryError, NumericalError
from .features import WindowChoice, lag_matrix, positional_matrix
from .oracle import OracleForecast

__all__ = [
    "BayesRidgeModel",
    "PseudoForecasts",
    "build_stage1_training_set",
    "fit_bayes_ridge",
    "generate_pseudo_forecasts",
]

# Gamma hyperprior constants from the standard evidence-approximation updates.
_EPS = 1e-6


@dataclass(frozen=True)
class BayesRidgeModel:
    """Fitted generator. Weights live in standardized space over kept columns.

    alpha is the noise precision, lam the weight precision. A zero-variance
    target (or no usable feature columns) degenerates to a constant predictor
    returning the target mean.
    """

    weights: np.ndarray
    alpha: float
    lam: float
    input_mean: np.ndarray
    input_std: np.ndarray
    kept_columns: np.ndarray
    target_mean: float
    target_std: float
    n_iter: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_mean.size:
            raise GeometryError(
                f"expected {self.input_mean.size} features, got {X.shape[1]}"
            )
        kept = self.kept_columns
        Z = (X[:, kept] - self.input_mean[kept]) / self.input_std[kept]
        return self.target_mean + self.target_std * (Z @ self.weights)


def fit_bayes_ridge(
    X,
    y,
    max_iter: int = 300,
    tol: float = 1e-4,
    fixed_lam: float | None = None,
) -> BayesRidgeModel:
    """Fit by iterative alpha/lam re-estimation on the SVD of the inputs.

    fixed_lam pins the weight precision instead of re-estimating it (used to
    verify prior dominance; normal callers leave it None).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if n < 2:
        raise GeometryError(f"need >= 2 rows to fit, got {n}")
    if y.shape != (n,):
        raise GeometryError(f"target length {y.size} != row count {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NumericalError("non-finite training values")

    col_mean = X.mean(axis=0)
    col_std = X.std(axis=0)
    kept = col_std > 0.0
    safe_std = np.where(kept, col_std, 1.0)

    t_mean = float(y.mean())
    t_std = float(y.std())

    def constant_model() -> BayesRidgeModel:
        return BayesRidgeModel(
            weights=np.zeros(int(kept.sum())),
            alpha=1.0,
            lam=1.0 if fixed_lam is None else fixed_lam,
            input_mean=col_mean,
            input_std=safe_std,
            kept_columns=kept,
            target_mean=t_mean,
            target_std=1.0,
            n_iter=0,
        )

    if t_std == 0.0 or not kept.any():
        return constant_model()

    Z = (X[:, kept] - col_mean[kept]) / safe_std[kept]
    ys = (y - t_mean) / t_std

    U, S, Vt = np.linalg.svd(Z, full_matrices=False)
    eig = S**2
    Uty = U.T @ ys

    alpha = 1.0
    lam = 1.0 if fixed_lam is None else fixed_lam
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        denom = lam + alpha * eig
        scaled = alpha * S * Uty / denom
        weights = Vt.T @ scaled
        fitted = U @ (S * scaled)
        sse = float(np.sum((ys - fitted) ** 2))
        gamma = float(np.sum(alpha * eig / denom))

        lam_new = lam if fixed_lam is not None else (gamma + 2 * _EPS) / (
            float(weights @ weights) + 2 * _EPS
        )
        alpha_new = (n - gamma + 2 * _EPS) / (sse + 2 * _EPS)
        if not (np.isfinite(lam_new) and np.isfinite(alpha_new)):
            raise NumericalError("hyperparameter update diverged")

        change = abs(alpha_new - alpha) / alpha + abs(lam_new - lam) / lam
        alpha, lam = alpha_new, lam_new
        if change < tol:
            break

    denom = lam + alpha * eig
    weights = Vt.T @ (alpha * S * Uty / denom)
    return BayesRidgeModel(
        weights=weights,
        alpha=alpha,
        lam=lam,
        input_mean=col_mean,
        input_std=safe_std,
        kept_columns=kept,
        target_mean=t_mean,
        target_std=t_std,
        n_iter=n_iter,
    )


def _feature_rows(
    values: np.ndarray, lags: np.ndarray, positions: np.ndarray
) -> np.ndarray:
    return np.column_stack([values.reshape(-1, 1), lags, positions])


def build_stage1_training_set(
    series,
    windows: WindowChoice,
    window_forecasts,
    spec: TaskSpec,
    seasonality: int,
) -> tuple[np.ndarray, np.ndarray]:
    """One row per step of each selected window; targets are the oracle
    replies for that window, order preserved.

    Feature layout per row at time t: [y_t, Y_{t-L:t-1}, positions(t)].
    """
    series = np.asarray(series, dtype=float)
    F, L = spec.horizon_len, spec.lag_count
    if len(window_forecasts) != len(windows.starts):
        raise GeometryError("one oracle forecast required per selected window")

    X_parts, y_parts = [], []
    for start, forecast in zip(windows.starts, window_forecasts):
        if isinstance(forecast, OracleForecast):
            forecast = forecast.mean
        mean = np.asarray(forecast, dtype=float)
        if mean.size != F:
            raise GeometryError(
                f"window forecast length {mean.size} != horizon_len {F}"
            )
        if start <= L:
            raise GeometryError(
                f"window start {start} leaves no room for {L} lags"
            )
        ts = range(start, start + F)
        X_parts.append(
            _feature_rows(
                series[start - 1 : start - 1 + F],
                lag_matrix(series, L, ts),
                positional_matrix(ts, seasonality, spec.pos_dim),
            )
        )
        y_parts.append(mean)
    return np.vstack(X_parts), np.concatenate(y_parts)


@dataclass(frozen=True)
class PseudoForecasts:
    """Generator output over the valid history [valid_from, H] and horizon."""

    history: np.ndarray
    horizon: np.ndarray
    valid_from: int

    def __post_init__(self):
        history = np.asarray(self.history, dtype=float)
        horizon = np.asarray(self.horizon, dtype=float)
        if not (np.all(np.isfinite(history)) and np.all(np.isfinite(horizon))):
            raise NumericalError("pseudo-forecasts contain non-finite values")
        history.setflags(write=False)
        horizon.setflags(write=False)
        object.__setattr__(self, "history", history)
        object.__setattr__(self, "horizon", horizon)


def horizon_lag_matrix(
    series: np.ndarray, horizon_values: np.ndarray, lag_count: int
) -> np.ndarray:
    """Lag vectors for t in [H+1, H+F]: true series where t-j <= H, the
    horizon forecast where t-j > H."""
    series = np.asarray(series, dtype=float)
    horizon_values = np.asarray(horizon_values, dtype=float)
    extended = np.concatenate([series, horizon_values])
    H, F = series.size, horizon_values.size
    out = np.empty((F, lag_count), dtype=float)
    for i in range(F):
        t = H + 1 + i
        out[i] = extended[t - 1 - lag_count : t - 1]
    return out


def generate_pseudo_forecasts(
    model: BayesRidgeModel,
    series,
    oracle_horizon_mean,
    spec: TaskSpec,
    seasonality: int,
) -> PseudoForecasts:
    """Run the generator over the history (value = true y_t) and the horizon
    (value = oracle forecast, lags stitched across the boundary)."""
    series = np.asarray(series, dtype=float)
    oracle_mean = np.asarray(oracle_horizon_mean, dtype=float)
    H, F, L = series.size, spec.horizon_len, spec.lag_count
    if oracle_mean.size != F:
        raise GeometryError(
            f"oracle horizon forecast length {oracle_mean.size} != horizon_len {F}"
        )
    if H <= L:
        raise GeometryError(f"history {H} too short for {L} lags")

    hist_ts = range(L + 1, H + 1)
    X_hist = _feature_rows(
        series[L:],
        lag_matrix(series, L, hist_ts),
        positional_matrix(hist_ts, seasonality, spec.pos_dim),
    )
    hor_ts = range(H + 1, H + F + 1)
    X_hor = _feature_rows(
        oracle_mean,
        horizon_lag_matrix(series, oracle_mean, L),
        positional_matrix(hor_ts, seasonality, spec.pos_dim),
    )
    return PseudoForecasts(
        history=model.predict(X_hist),
        horizon=model.predict(X_hor),
        valid_from=L + 1,
    )
