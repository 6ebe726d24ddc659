"""Shared test doubles and geometry helpers.

The standard test geometry is H=288, F=24, h=96, s=24: the candidate
partition then holds (288-96)/24 = 8 windows, enough for every window
count the ablations use, while a full adapter run stays around two
seconds.
"""

from __future__ import annotations

import numpy as np
import pytest

from covadapt import (
    Oracle,
    SyntheticSpec,
    TaskSpec,
    TimeSeriesInstance,
    make_instance,
)
from covadapt.gp import SearchSpace

GEOM = dict(history_len=288, horizon_len=24, min_context=96, lag_count=24)
SEASONALITY = 24


def tiny_search_space() -> SearchSpace:
    """Two-candidate grid; wiring tests do not need the full sweep."""
    return SearchSpace(
        k1_kinds=("rbf",),
        k2_kinds=("linear",),
        lengthscales=(1.0,),
        variances=(1.0,),
        noise_variances=(1e-2,),
        subsets=((), ("lags",)),
    )


class ScriptedOracle(Oracle):
    """Oracle whose forecast is a plain function of (context, horizon)."""

    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def _forecast(self, request):
        return np.asarray(self.fn(request.context, request.horizon), dtype=float)


def constant_oracle(value: float) -> ScriptedOracle:
    return ScriptedOracle(lambda ctx, horizon: np.full(horizon, float(value)))


@pytest.fixture
def task_spec():
    return TaskSpec(**GEOM)


def make_task_spec(seed: int = 0, **overrides) -> TaskSpec:
    kw = dict(GEOM, seed=seed)
    kw.update(overrides)
    return TaskSpec(**kw)


def synthetic_instance(
    seed: int,
    coupling: float = 1.0,
    noise_std: float = 1.0,
    oracle_covariate: bool = False,
    amplitude: float = 10.0,
) -> TimeSeriesInstance:
    spec = SyntheticSpec(
        length=GEOM["history_len"] + GEOM["horizon_len"],
        seasonality=SEASONALITY,
        amplitude=amplitude,
        coupling=coupling,
        noise_std=noise_std,
        seed=seed,
        oracle_covariate=oracle_covariate,
    )
    return make_instance(spec, GEOM["history_len"], GEOM["horizon_len"])
