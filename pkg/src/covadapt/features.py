"""Lag features, sinusoidal position encodings, and window selection.

Stage I trains on a handful of short windows drawn from the tail of the
history. Windows partition [h+1, H] into N = floor((H-h)/F) consecutive
blocks of length F anchored at H; any remainder is dropped from the oldest
end so the blocks align with the freshest data. Selection strategies:

  zscore  rank windows by mean deviation from the history mean in units of
          the history std, keep lowest / median / highest (evenly spaced
          ranks for k > 3);
  latest  keep the k most recent windows;
  random  keep k uniformly without replacement, seeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TaskSpec
from .errors import ConfigError, GeometryError

__all__ = [
    "STRATEGIES",
    "WindowChoice",
    "lag_matrix",
    "positional_encoding",
    "positional_matrix",
    "select_windows",
]

STRATEGIES = ("zscore", "latest", "random")


@dataclass(frozen=True)
class WindowChoice:
    """Selected Stage-I windows.

    starts:       1-based first time step of each window, in selection order
                  (zscore: lowest, median, highest mean z-score).
    mean_zscores: mean z-score of each selected window, same order.
    strategy:     strategy that produced the selection; "latest" with
                  fallback=True when zscore degenerated on a constant series.
    """

    starts: tuple[int, ...]
    mean_zscores: tuple[float, ...]
    strategy: str
    fallback: bool = False

    def __post_init__(self):
        if len(self.starts) != len(self.mean_zscores):
            raise GeometryError("starts and mean_zscores lengths differ")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")


def lag_matrix(series: np.ndarray, lag_count: int, t_range) -> np.ndarray:
    """Row per t in t_range: series values at times t-L .. t-1 (1-indexed)."""
    series = np.asarray(series, dtype=float)
    ts = np.asarray(list(t_range), dtype=int)
    if ts.size and ts.min() <= lag_count:
        raise GeometryError(
            f"lag features need t > L = {lag_count}, got t = {ts.min()}"
        )
    if ts.size and ts.max() - 1 > series.size:
        raise GeometryError(
            f"lag features for t = {ts.max()} reach past the series end {series.size}"
        )
    out = np.empty((ts.size, lag_count), dtype=float)
    for i, t in enumerate(ts):
        out[i] = series[t - 1 - lag_count : t - 1]
    return out


def positional_encoding(t: int, seasonality: int, pos_dim: int) -> np.ndarray:
    """Sinusoidal encoding of the phase (t mod s)/s: [sin(2*pi*k*phi),
    cos(2*pi*k*phi)] for k = 1 .. pos_dim/2, interleaved sin then cos."""
    if pos_dim < 2 or pos_dim % 2 != 0:
        raise ConfigError(f"pos_dim must be even and >= 2, got {pos_dim}")
    if seasonality < 1:
        raise ConfigError(f"seasonality must be >= 1, got {seasonality}")
    phase = (t % seasonality) / seasonality
    out = np.empty(pos_dim, dtype=float)
    for k in range(1, pos_dim // 2 + 1):
        out[2 * k - 2] = math.sin(2.0 * math.pi * k * phase)
        out[2 * k - 1] = math.cos(2.0 * math.pi * k * phase)
    return out


def positional_matrix(t_range, seasonality: int, pos_dim: int) -> np.ndarray:
    """positional_encoding stacked over t_range."""
    ts = list(t_range)
    out = np.empty((len(ts), pos_dim), dtype=float)
    for i, t in enumerate(ts):
        out[i] = positional_encoding(t, seasonality, pos_dim)
    return out


def window_starts(spec: TaskSpec) -> np.ndarray:
    """1-based start of every candidate window, oldest first, anchored at H."""
    H, F, h = spec.history_len, spec.horizon_len, spec.min_context
    n = (H - h) // F
    if n < 1:
        raise GeometryError("no candidate windows fit between min_context and H")
    return np.array([H - (n - j) * F + 1 for j in range(n)], dtype=int)


def _zscore_rank_positions(n: int, k: int) -> list[int]:
    # k = 3 keeps lowest / lower-median / highest exactly; larger k spreads
    # evenly over the sorted ranks with both endpoints always present.
    if k == 3:
        return [0, math.ceil(n / 2) - 1, n - 1]
    return sorted({round(i * (n - 1) / (k - 1)) for i in range(k)})


def select_windows(
    series: np.ndarray,
    spec: TaskSpec,
    strategy: str = "zscore",
    seed: int | None = None,
    k: int = 3,
) -> WindowChoice:
    """Choose k Stage-I windows from the candidate partition of [h+1, H].

    A constant series makes z-scores undefined; that case falls back to the
    latest strategy and sets the fallback flag rather than raising, so the
    pipeline can proceed and report the degradation.
    """
    series = np.asarray(series, dtype=float)
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    if k < 1:
        raise ConfigError(f"window count must be >= 1, got {k}")
    starts = window_starts(spec)
    n = starts.size
    if n < k:
        raise GeometryError(f"only {n} candidate windows for k = {k}")

    F = spec.horizon_len
    mean = float(series.mean())
    std = float(series.std())
    window_means = np.array(
        [series[s - 1 : s - 1 + F].mean() for s in starts], dtype=float
    )

    fallback = False
    if strategy == "zscore" and std == 0.0:
        strategy, fallback = "latest", True

    if strategy == "zscore":
        zbars = (window_means - mean) / std
        order = sorted(range(n), key=lambda j: (zbars[j], starts[j]))
        chosen = [order[pos] for pos in _zscore_rank_positions(n, k)]
    elif strategy == "latest":
        chosen = list(range(n - k, n))
    else:
        rng = np.random.default_rng(spec.seed if seed is None else seed)
        chosen = sorted(rng.choice(n, size=k, replace=False).tolist())

    if std > 0.0:
        zsel = [(window_means[j] - mean) / std for j in chosen]
    else:
        zsel = [0.0] * len(chosen)
    return WindowChoice(
        starts=tuple(int(starts[j]) for j in chosen),
        mean_zscores=tuple(float(z) for z in zsel),
        strategy=strategy,
        fallback=fallback,
    )
