"""Exact Gaussian-process regression with composite kernels.

The adapter's GP sees rows z = [z1 ; z2]: z1 stacks the base signal (pseudo-
forecast or oracle value) with optional lag and position blocks, z2 holds the
covariates. The kernel is a sum k(z, z') = k1(z1, z1') + k2(z2, z2'); the
posterior is the classic Cholesky form

    mean = K_* a,  a = (K + noise I)^{-1} y
    var  = diag(K_**) - rowsums(V * V),  V = L^{-1} K_*^T

computed on standardized inputs and targets, de-standardized on the way out.
Hyperparameters come from a validation grid search (tune_gp), not gradient
ascent; the grid is small, fixed, and shared between both kernels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ConfigError, GeometryError, NumericalError
from .kernels import linear_gram, pairwise_sq_dists, stationary_gram

__all__ = [
    "AdapterFeatures",
    "ColumnStats",
    "FEATURE_SUBSETS",
    "GPAdapterModel",
    "KERNEL_KINDS",
    "KernelConfig",
    "KernelParams",
    "ScalarStats",
    "SearchSpace",
    "TuneResult",
    "gp_fit",
    "gp_predict",
    "gram",
    "kernel_eval",
    "tune_gp",
]

log = logging.getLogger(__name__)

KERNEL_KINDS = ("rbf", "matern32", "matern52", "linear")
FEATURE_SUBSETS = ((), ("lags",), ("positions",), ("lags", "positions"))

JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class KernelParams:
    variance: float
    lengthscale: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigError(f"kernel variance must be > 0, got {self.variance}")
        if not self.lengthscale > 0:
            raise ConfigError(f"lengthscale must be > 0, got {self.lengthscale}")


@dataclass(frozen=True)
class KernelConfig:
    k1_kind: str
    k2_kind: str
    k1_params: KernelParams
    k2_params: KernelParams
    noise_variance: float

    def __post_init__(self):
        for kind in (self.k1_kind, self.k2_kind):
            if kind not in KERNEL_KINDS:
                raise ConfigError(f"unknown kernel kind {kind!r}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise variance must be >= 0, got {self.noise_variance}")


def kernel_eval(kind: str, params: KernelParams, a, b) -> float:
    """Single kernel entry; the Gram builders are the vectorized twin."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size:
        raise GeometryError("kernel arguments must share a dimension")
    if kind == "linear":
        return params.variance * float(a @ b)
    r = float(np.linalg.norm(a - b))
    ell = params.lengthscale
    if kind == "rbf":
        return params.variance * float(np.exp(-(r * r) / (2.0 * ell * ell)))
    if kind == "matern32":
        sr = np.sqrt(3.0) * r / ell
        return params.variance * float((1.0 + sr) * np.exp(-sr))
    if kind == "matern52":
        sr = np.sqrt(5.0) * r / ell
        return params.variance * float((1.0 + sr + sr * sr / 3.0) * np.exp(-sr))
    raise ConfigError(f"unknown kernel kind {kind!r}")


def gram(kind: str, params: KernelParams, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Full Gram block of one kernel over row sets A, B."""
    if kind == "linear":
        return params.variance * linear_gram(A, B)
    sqd = pairwise_sq_dists(A, B)
    return params.variance * stationary_gram(kind, sqd, params.lengthscale)


def _gram_diag(kind: str, params: KernelParams, A: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if kind == "linear":
        return params.variance * np.sum(A * A, axis=1)
    return np.full(A.shape[0], params.variance)


# -- standardization ----------------------------------------------------------


@dataclass(frozen=True)
class ColumnStats:
    """Per-column mean/std; zero-std columns standardize to 0 via a unit std."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_rows(cls, X: np.ndarray) -> "ColumnStats":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0), std=np.where(std > 0, std, 1.0))

    @classmethod
    def identity(cls, dim: int) -> "ColumnStats":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    @classmethod
    def concat(cls, parts) -> "ColumnStats":
        return cls(
            mean=np.concatenate([p.mean for p in parts]),
            std=np.concatenate([p.std for p in parts]),
        )

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.mean.size:
            raise GeometryError(
                f"stats cover {self.mean.size} columns, inputs have {X.shape[1]}"
            )
        return (X - self.mean) / self.std


@dataclass(frozen=True)
class ScalarStats:
    """Target mean/std used to de-standardize predictions."""

    mean: float
    std: float

    @classmethod
    def of(cls, y: np.ndarray) -> "ScalarStats":
        y = np.asarray(y, dtype=float)
        std = float(y.std())
        return cls(mean=float(y.mean()), std=std if std > 0 else 1.0)

    @classmethod
    def identity(cls) -> "ScalarStats":
        return cls(mean=0.0, std=1.0)


# -- fit / predict ------------------------------------------------------------


def cholesky_with_jitter(K: np.ndarray, noise_variance: float):
    """Factor K + noise I, escalating diagonal jitter geometrically from
    1e-10 to 1e-4 when the bare matrix is not numerically positive definite."""
    if not np.all(np.isfinite(K)):
        raise NumericalError("Gram matrix contains non-finite values")
    n = K.shape[0]
    eye = np.eye(n)
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(K + (noise_variance + jitter) * eye)
            return L, jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = JITTER_START
            elif jitter >= JITTER_MAX:
                raise NumericalError(
                    f"Cholesky failed with jitter up to {JITTER_MAX:g}"
                ) from None
            else:
                jitter *= 10.0


@dataclass(frozen=True)
class GPAdapterModel:
    """Fitted GP: kernel, standardized training rows, Cholesky factor of
    (K + noise I), and the solved alpha vector."""

    kernel: KernelConfig
    split_index: int
    train_z: np.ndarray
    train_targets_std: np.ndarray
    cholesky_factor: np.ndarray
    alpha_vector: np.ndarray
    input_stats: ColumnStats
    target_stats: ScalarStats
    jitter: float


def _composite_gram(
    kernel: KernelConfig, Za: np.ndarray, Zb: np.ndarray, split: int
) -> np.ndarray:
    g1 = gram(kernel.k1_kind, kernel.k1_params, Za[:, :split], Zb[:, :split])
    g2 = gram(kernel.k2_kind, kernel.k2_params, Za[:, split:], Zb[:, split:])
    return g1 + g2


def gp_fit(
    inputs,
    targets,
    kernel: KernelConfig,
    split_index: int | None = None,
    input_stats: ColumnStats | None = None,
    target_stats: ScalarStats | None = None,
) -> GPAdapterModel:
    """Fit the exact GP. split_index bounds the z1 block (defaults to the full
    width, making k2 act on empty vectors); stats default to identity."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    n, dim = X.shape
    if n < 1 or y.size != n:
        raise GeometryError(f"inputs ({n} rows) and targets ({y.size}) mismatch")
    split = dim if split_index is None else split_index
    if not 0 <= split <= dim:
        raise GeometryError(f"split_index {split} outside [0, {dim}]")
    stats = input_stats if input_stats is not None else ColumnStats.identity(dim)
    tstats = target_stats if target_stats is not None else ScalarStats.identity()

    Z = stats.transform(X)
    ys = (y - tstats.mean) / tstats.std
    K = _composite_gram(kernel, Z, Z, split)
    L, jitter = cholesky_with_jitter(K, kernel.noise_variance)
    alpha = cho_solve((L, True), ys, check_finite=False)
    return GPAdapterModel(
        kernel=kernel,
        split_index=split,
        train_z=Z,
        train_targets_std=ys,
        cholesky_factor=L,
        alpha_vector=alpha,
        input_stats=stats,
        target_stats=tstats,
        jitter=jitter,
    )


def gp_predict(model: GPAdapterModel, test_inputs) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at test rows, original target scale.

    Variance is the latent predictive variance (no observation noise added),
    floored at 0; a pre-floor value below -1e-6 means the algebra broke and
    raises instead of being hidden by the floor.
    """
    Xt = np.atleast_2d(np.asarray(test_inputs, dtype=float))
    Zt = model.input_stats.transform(Xt)
    split = model.split_index
    Ks = _composite_gram(model.kernel, Zt, model.train_z, split)
    mean_std = Ks @ model.alpha_vector

    V = solve_triangular(
        model.cholesky_factor, Ks.T, lower=True, check_finite=False
    )
    diag = _gram_diag(model.kernel.k1_kind, model.kernel.k1_params, Zt[:, :split])
    diag = diag + _gram_diag(model.kernel.k2_kind, model.kernel.k2_params, Zt[:, split:])
    var_std = diag - np.sum(V * V, axis=0)
    if np.any(var_std < -1e-6):
        raise NumericalError(
            f"posterior variance fell to {float(var_std.min()):.3e}"
        )
    var_std = np.maximum(var_std, 0.0)

    tstats = model.target_stats
    mean = tstats.mean + tstats.std * mean_std
    var = (tstats.std**2) * var_std
    return mean, var


# -- feature assembly for tuning ----------------------------------------------


@dataclass(frozen=True)
class AdapterFeatures:
    """Feature blocks for a set of rows, kept separate so tuning can include
    or drop the lag/position blocks per candidate.

    z1 of a subset = [value | lags? | positions?]; z2 = covariates always.
    """

    value: np.ndarray
    lags: np.ndarray
    positions: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float).ravel())
        n = self.value.size
        for name in ("lags", "positions", "covariates"):
            block = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if block.shape[0] != n:
                raise GeometryError(f"{name} rows {block.shape[0]} != {n}")
            object.__setattr__(self, name, block)

    @property
    def n_rows(self) -> int:
        return self.value.size

    def rows(self, index) -> "AdapterFeatures":
        """Same blocks restricted to a boolean mask or index array."""
        return AdapterFeatures(
            value=self.value[index],
            lags=self.lags[index],
            positions=self.positions[index],
            covariates=self.covariates[index],
        )

    def z1(self, subset: tuple[str, ...]) -> np.ndarray:
        parts = [self.value.reshape(-1, 1)]
        if "lags" in subset:
            parts.append(self.lags)
        if "positions" in subset:
            parts.append(self.positions)
        return np.column_stack(parts)

    def assemble(self, subset: tuple[str, ...]) -> tuple[np.ndarray, int]:
        """Full input matrix and the z1/z2 split index for one subset."""
        z1 = self.z1(subset)
        return np.column_stack([z1, self.covariates]), z1.shape[1]

    def stats(self) -> dict[str, ColumnStats]:
        return {
            "value": ColumnStats.from_rows(self.value.reshape(-1, 1)),
            "lags": ColumnStats.from_rows(self.lags)
            if self.lags.shape[1]
            else ColumnStats.identity(0),
            "positions": ColumnStats.from_rows(self.positions)
            if self.positions.shape[1]
            else ColumnStats.identity(0),
            "covariates": ColumnStats.from_rows(self.covariates)
            if self.covariates.shape[1]
            else ColumnStats.identity(0),
        }


def assemble_stats(
    stats: dict[str, ColumnStats], subset: tuple[str, ...]
) -> ColumnStats:
    parts = [stats["value"]]
    if "lags" in subset:
        parts.append(stats["lags"])
    if "positions" in subset:
        parts.append(stats["positions"])
    parts.append(stats["covariates"])
    return ColumnStats.concat(parts)


# -- grid search ---------------------------------------------------------------


@dataclass(frozen=True)
class SearchSpace:
    """Grid for validation-driven selection. The lengthscale and variance axes
    are shared by both kernels, keeping the product at 4*4*5*3*3*4 candidates."""

    k1_kinds: tuple[str, ...] = KERNEL_KINDS
    k2_kinds: tuple[str, ...] = KERNEL_KINDS
    lengthscales: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0)
    variances: tuple[float, ...] = (0.5, 1.0, 2.0)
    noise_variances: tuple[float, ...] = (1e-4, 1e-2, 1e-1)
    subsets: tuple[tuple[str, ...], ...] = FEATURE_SUBSETS

    def n_candidates(self) -> int:
        return (
            len(self.k1_kinds)
            * len(self.k2_kinds)
            * len(self.lengthscales)
            * len(self.variances)
            * len(self.noise_variances)
            * len(self.subsets)
        )


@dataclass(frozen=True)
class TuneResult:
    """Winning candidate plus the stats that standardize its assembled inputs."""

    kernel: KernelConfig
    subset: tuple[str, ...]
    val_mae: float
    n_candidates: int
    n_failed: int
    stats: ColumnStats | None = field(repr=False, default=None)


def _base_gram(kind: str, sqd: np.ndarray, G: np.ndarray, ell: float) -> np.ndarray:
    return G if kind == "linear" else stationary_gram(kind, sqd, ell)


def tune_gp(
    train: AdapterFeatures,
    train_targets,
    val: AdapterFeatures,
    val_targets,
    stats: dict[str, ColumnStats],
    target_stats: ScalarStats,
    space: SearchSpace | None = None,
    seed: int | None = None,
) -> TuneResult:
    """Grid search over kernels, scales, noise, and feature subsets; returns
    the candidate with minimum validation MAE.

    Ties break toward fewer features, then smaller noise, then declaration
    order in the grid product (k1, k2, lengthscale, variance, noise, subset),
    so the winner is independent of evaluation order. `seed` is accepted for
    interface stability; the walk is deterministic and never consumes it.

    Base Grams are cached per (kind, lengthscale, subset) over the stacked
    train+val rows: the signal variance is a scalar multiplier, so each
    candidate only slices, factors, and solves.
    """
    space = space or SearchSpace()
    y_tr = np.asarray(train_targets, dtype=float)
    y_val = np.asarray(val_targets, dtype=float)
    ntr, nval = train.n_rows, val.n_rows
    if nval < 1:
        raise GeometryError("tuning needs at least one validation row")
    if y_tr.size != ntr or y_val.size != nval:
        raise GeometryError("feature rows and targets mismatch")

    ys_tr = (y_tr - target_stats.mean) / target_stats.std
    tr_idx = slice(0, ntr)
    val_idx = slice(ntr, ntr + nval)

    # z2 (covariates) never varies across candidates.
    z2_stats = stats["covariates"]
    Z2 = np.vstack(
        [z2_stats.transform(train.covariates), z2_stats.transform(val.covariates)]
    )
    sqd2 = pairwise_sq_dists(Z2, Z2)
    G2 = linear_gram(Z2, Z2)

    n_subsets = len(space.subsets)
    n_noise = len(space.noise_variances)
    n_var = len(space.variances)
    n_ell = len(space.lengthscales)
    n_k2 = len(space.k2_kinds)

    best_key = None
    best = None
    n_failed = 0

    for i_sub, subset in enumerate(space.subsets):
        full_stats = assemble_stats(stats, subset)
        X1_tr, split = train.assemble(subset)
        X1_val, _ = val.assemble(subset)
        Z_all = np.vstack([full_stats.transform(X1_tr), full_stats.transform(X1_val)])
        Z1 = Z_all[:, :split]
        sqd1 = pairwise_sq_dists(Z1, Z1)
        G1 = linear_gram(Z1, Z1)

        for i_k1, k1_kind in enumerate(space.k1_kinds):
            for i_k2, k2_kind in enumerate(space.k2_kinds):
                for i_ell, ell in enumerate(space.lengthscales):
                    B = _base_gram(k1_kind, sqd1, G1, ell) + _base_gram(
                        k2_kind, sqd2, G2, ell
                    )
                    B_tr = B[tr_idx, tr_idx]
                    B_val = B[val_idx, tr_idx]
                    for i_var, var in enumerate(space.variances):
                        K_tr = var * B_tr
                        for i_noise, noise in enumerate(space.noise_variances):
                            decl = (
                                (
                                    ((i_k1 * n_k2 + i_k2) * n_ell + i_ell) * n_var
                                    + i_var
                                )
                                * n_noise
                                + i_noise
                            ) * n_subsets + i_sub
                            try:
                                L, _ = cholesky_with_jitter(K_tr, noise)
                                a = cho_solve((L, True), ys_tr, check_finite=False)
                            except NumericalError as exc:
                                n_failed += 1
                                log.debug(
                                    "candidate %d failed: %s", decl, exc
                                )
                                continue
                            pred_std = (var * B_val) @ a
                            pred = target_stats.mean + target_stats.std * pred_std
                            mae = float(np.mean(np.abs(pred - y_val)))
                            if not np.isfinite(mae):
                                n_failed += 1
                                continue
                            key = (mae, len(subset), noise, decl)
                            if best_key is None or key < best_key:
                                best_key = key
                                params = KernelParams(variance=var, lengthscale=ell)
                                best = TuneResult(
                                    kernel=KernelConfig(
                                        k1_kind=k1_kind,
                                        k2_kind=k2_kind,
                                        k1_params=params,
                                        k2_params=params,
                                        noise_variance=noise,
                                    ),
                                    subset=subset,
                                    val_mae=mae,
                                    n_candidates=space.n_candidates(),
                                    n_failed=0,
                                    stats=full_stats,
                                )

    if best is None:
        raise NumericalError("every tuning candidate failed")
    return replace(best, n_failed=n_failed)
