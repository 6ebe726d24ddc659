"""Hot numerical kernels: pairwise squared distances and Gram transforms.

Kernel-grid tuning rebuilds thousands of Gram matrices per instance, so the
entrywise work lives here behind numba-compiled loops. Two interchangeable
backends exist, and the compiled one is selected automatically when numba
imports; it wins on the distance accumulation and the heavier Matern
transforms while numpy's vectorized exp keeps the rbf edge. Set
COVADAPT_DISABLE_NUMBA=1 to force the pure-numpy path (or to rule numba out
when debugging); both paths
agree to floating-point roundoff and `benchmarks/bench_kernels.py` times them
side by side.

All transforms return unit-signal-variance Grams; callers scale by the kernel
variance afterwards.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ConfigError

__all__ = [
    "linear_gram",
    "numba_enabled",
    "pairwise_sq_dists",
    "pairwise_sq_dists_numpy",
    "stationary_gram",
    "stationary_gram_numpy",
]

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)

_disable = os.environ.get("COVADAPT_DISABLE_NUMBA", "").strip() not in ("", "0")
if _disable:
    _HAVE_NUMBA = False
else:
    try:
        import numba as nb

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False


def numba_enabled() -> bool:
    """True when the compiled backend is active."""
    return _HAVE_NUMBA


# -- pure-numpy backend -------------------------------------------------------


def pairwise_sq_dists_numpy(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (len(A), len(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    out = aa + bb - 2.0 * (A @ B.T)
    np.maximum(out, 0.0, out=out)
    return out


def stationary_gram_numpy(kind: str, sq_dists: np.ndarray, lengthscale: float) -> np.ndarray:
    if kind == "rbf":
        return np.exp(sq_dists / (-2.0 * lengthscale * lengthscale))
    r = np.sqrt(sq_dists) / lengthscale
    if kind == "matern32":
        sr = _SQRT3 * r
        return (1.0 + sr) * np.exp(-sr)
    if kind == "matern52":
        sr = _SQRT5 * r
        return (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)
    raise ConfigError(f"unknown stationary kernel kind {kind!r}")


# -- numba backend ------------------------------------------------------------

if _HAVE_NUMBA:

    @nb.njit(cache=True, parallel=True)
    def _sq_dists_nb(A, B):  # pragma: no cover - exercised via dispatcher
        na, d = A.shape
        nbr = B.shape[0]
        out = np.empty((na, nbr), dtype=np.float64)
        for i in nb.prange(na):
            for j in range(nbr):
                acc = 0.0
                for k in range(d):
                    diff = A[i, k] - B[j, k]
                    acc += diff * diff
                out[i, j] = acc
        return out

    @nb.njit(cache=True, parallel=True)
    def _rbf_nb(D, ell):  # pragma: no cover
        n, m = D.shape
        out = np.empty((n, m), dtype=np.float64)
        inv = -0.5 / (ell * ell)
        for i in nb.prange(n):
            for j in range(m):
                out[i, j] = math.exp(D[i, j] * inv)
        return out

    @nb.njit(cache=True, parallel=True)
    def _matern32_nb(D, ell):  # pragma: no cover
        n, m = D.shape
        out = np.empty((n, m), dtype=np.float64)
        c = _SQRT3 / ell
        for i in nb.prange(n):
            for j in range(m):
                sr = c * math.sqrt(D[i, j])
                out[i, j] = (1.0 + sr) * math.exp(-sr)
        return out

    @nb.njit(cache=True, parallel=True)
    def _matern52_nb(D, ell):  # pragma: no cover
        n, m = D.shape
        out = np.empty((n, m), dtype=np.float64)
        c = _SQRT5 / ell
        for i in nb.prange(n):
            for j in range(m):
                sr = c * math.sqrt(D[i, j])
                out[i, j] = (1.0 + sr + sr * sr / 3.0) * math.exp(-sr)
        return out


# -- dispatchers --------------------------------------------------------------


def pairwise_sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances on the active backend."""
    if _HAVE_NUMBA:
        A = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype=float)))
        B = np.ascontiguousarray(np.atleast_2d(np.asarray(B, dtype=float)))
        return _sq_dists_nb(A, B)
    return pairwise_sq_dists_numpy(A, B)


def stationary_gram(kind: str, sq_dists: np.ndarray, lengthscale: float) -> np.ndarray:
    """Unit-variance stationary Gram from precomputed squared distances."""
    if _HAVE_NUMBA:
        D = np.ascontiguousarray(np.asarray(sq_dists, dtype=float))
        if kind == "rbf":
            return _rbf_nb(D, lengthscale)
        if kind == "matern32":
            return _matern32_nb(D, lengthscale)
        if kind == "matern52":
            return _matern52_nb(D, lengthscale)
        raise ConfigError(f"unknown stationary kernel kind {kind!r}")
    return stationary_gram_numpy(kind, sq_dists, lengthscale)


def linear_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Unit-variance linear Gram <a, b>; BLAS already owns this one."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return A @ B.T
