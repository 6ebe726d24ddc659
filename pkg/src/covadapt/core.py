"""Core domain types and task geometry.

Everything downstream works in 1-indexed time: a history ``Y_{1:H}`` is stored
as an array of length H whose element ``t`` lives at index ``t - 1``. Types are
frozen dataclasses holding read-only numpy arrays; construction validates every
invariant so an accepted value never needs re-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, GeometryError

__all__ = [
    "ForecastResult",
    "TaskSpec",
    "TimeSeriesInstance",
    "default_lag_count",
    "default_min_context",
    "validate_instance",
]

DEFAULT_POS_DIM = 8


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def default_min_context(history_len: int, horizon_len: int, seasonality: int) -> int:
    """Pick a minimum context: max(2s, H/2), rounded down to a multiple of F,
    pushed below H - 3F when that leaves room for the required windows."""
    cand = max(2 * seasonality, history_len // 2)
    cand = (cand // horizon_len) * horizon_len
    cap = history_len - 3 * horizon_len
    if cand > cap:
        cand = (cap // horizon_len) * horizon_len
    if cand < 1:
        raise GeometryError(
            f"no valid minimum context for history {history_len} and horizon {horizon_len}"
        )
    return cand


def default_lag_count(seasonality: int, min_context: int) -> int:
    """One season of lags, capped so lag windows fit inside the minimum context."""
    return max(1, min(seasonality, min_context - 1))


@dataclass(frozen=True)
class TaskSpec:
    """Geometry and featurization parameters for one forecasting task.

    history_len:  H, observed steps.
    horizon_len:  F, steps to predict.
    min_context:  h, shortest history the oracle is trusted on; candidate
                  windows live in [h+1, H].
    lag_count:    L, lag features per row.
    pos_dim:      dimension of the sinusoidal position encoding (even).
    seed:         seed for every randomized choice made under this spec.
    """

    history_len: int
    horizon_len: int
    min_context: int
    lag_count: int
    pos_dim: int = DEFAULT_POS_DIM
    seed: int = 0

    def __post_init__(self):
        H, F, h, L, p = (
            self.history_len,
            self.horizon_len,
            self.min_context,
            self.lag_count,
            self.pos_dim,
        )
        if F < 1:
            raise GeometryError(f"horizon_len must be >= 1, got {F}")
        if not h < H:
            raise GeometryError(f"min_context {h} must be < history_len {H}")
        if H - h < 3 * F:
            raise GeometryError(
                f"history beyond min_context holds {(H - h) // F} windows of length {F}; need >= 3"
            )
        if L < 1:
            raise ConfigError(f"lag_count must be >= 1, got {L}")
        if L >= h:
            raise ConfigError(f"lag_count {L} must be < min_context {h}")
        if p < 2 or p % 2 != 0:
            raise ConfigError(f"pos_dim must be even and >= 2, got {p}")


@dataclass(frozen=True)
class TimeSeriesInstance:
    """One forecasting example: target history, covariates over history and
    horizon, and (in evaluation mode) the true horizon values.

    target:        length-H array, Y_{1:H}.
    covariates:    (H+F) x d array, X_{1:H+F}; d may be 0.
    horizon_len:   F; fixes the covariate row count H+F.
    seasonality:   steps per season, 1 <= s <= H.
    frequency:     informational token such as "1H".
    horizon_truth: optional length-F array of true future values.
    """

    target: np.ndarray
    covariates: np.ndarray
    horizon_len: int
    seasonality: int
    frequency: str = "1H"
    horizon_truth: np.ndarray | None = None

    def __post_init__(self):
        target = _readonly(self.target)
        if target.ndim != 1 or target.size == 0:
            raise GeometryError("target must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(target)):
            raise DataError("target contains non-finite values")
        object.__setattr__(self, "target", target)

        H = target.size
        F = self.horizon_len
        if F < 1:
            raise GeometryError(f"horizon_len must be >= 1, got {F}")

        cov = np.atleast_2d(np.array(self.covariates, dtype=float))
        if np.array(self.covariates).size == 0:
            cov = np.empty((H + F, 0), dtype=float)
        if cov.ndim != 2 or cov.shape[0] != H + F:
            raise GeometryError(
                f"covariates must have H+F = {H + F} rows, got shape {cov.shape}"
            )
        if not np.all(np.isfinite(cov)):
            raise DataError("covariates contain non-finite values")
        cov.setflags(write=False)
        object.__setattr__(self, "covariates", cov)

        if self.seasonality < 1:
            raise ConfigError(f"seasonality must be >= 1, got {self.seasonality}")
        if self.seasonality > H:
            raise GeometryError(
                f"seasonality {self.seasonality} exceeds history length {H}"
            )

        if self.horizon_truth is not None:
            truth = _readonly(self.horizon_truth)
            if truth.ndim != 1 or truth.size != F:
                raise GeometryError(
                    f"horizon_truth must have length F = {F}, got {truth.size}"
                )
            if not np.all(np.isfinite(truth)):
                raise DataError("horizon_truth contains non-finite values")
            object.__setattr__(self, "horizon_truth", truth)

    @property
    def history_len(self) -> int:
        return self.target.size

    @property
    def num_covariates(self) -> int:
        return self.covariates.shape[1]


@dataclass(frozen=True)
class ForecastResult:
    """Final adapter output for one instance.

    point:         length-F forecast after uncertainty filtering.
    variance:      length-F posterior predictive variance, original scale.
    reverted_mask: True where filtering reverted to the oracle forecast.
    oracle_calls:  oracle invocations consumed producing this result.
    pseudo_smape:  SMAPE of history pseudo-forecasts vs. the true history
                   (None in direct mode and on the degenerate fallback).
    degenerate_fallback: True when a constant history forced the raw oracle
                   forecast to be returned unmodified.
    diagnostics:   selection summary (kernel, features, threshold) for reports.
    """

    point: np.ndarray
    variance: np.ndarray
    reverted_mask: np.ndarray
    oracle_calls: int
    pseudo_smape: float | None = None
    degenerate_fallback: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        point = _readonly(self.point)
        variance = _readonly(self.variance)
        mask = _readonly(self.reverted_mask, dtype=bool)
        if not (point.size == variance.size == mask.size):
            raise GeometryError("point, variance, and reverted_mask lengths differ")
        if np.any(variance < 0):
            raise DataError("variance entries must be >= 0")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "variance", variance)
        object.__setattr__(self, "reverted_mask", mask)

    @property
    def reverted_count(self) -> int:
        return int(self.reverted_mask.sum())


def validate_instance(instance: TimeSeriesInstance, spec: TaskSpec) -> None:
    """Check that an instance and a spec fit together.

    Raises GeometryError on dimension mismatches, ConfigError on parameter
    violations. Instance-local invariants (finiteness, covariate row count)
    already held at construction.
    """
    H = instance.history_len
    if spec.history_len != H:
        raise GeometryError(
            f"spec history_len {spec.history_len} != instance history length {H}"
        )
    if spec.horizon_len != instance.horizon_len:
        raise GeometryError(
            f"spec horizon_len {spec.horizon_len} != instance horizon_len {instance.horizon_len}"
        )
    if spec.lag_count >= spec.min_context:
        raise ConfigError(
            f"lag_count {spec.lag_count} must be < min_context {spec.min_context}"
        )
    # TaskSpec.__post_init__ enforced h < H and (H - h) >= 3F for its own H;
    # the equality checks above make those hold for the instance too.
