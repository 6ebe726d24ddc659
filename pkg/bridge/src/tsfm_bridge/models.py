"""Model loading behind one sampling interface.

Every backend reduces to a callable object with

    sample_paths(context, horizon, samples) -> array of shape (samples, horizon)

so the serving loop never sees a model API. Real model packages are imported
lazily inside their loaders; only the selected family's dependencies have to
be installed. The mock model needs nothing beyond numpy and is fully
deterministic, which makes it the protocol-conformance workhorse.

Loaders honor the TSFM_BRIDGE_CACHE environment variable as the weight cache
directory where the family supports one.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

from .config import BridgeConfig, BridgeError

__all__ = ["MockModel", "load_model"]


class MockModel:
    """Drift-plus-noise sampler standing in for a real model.

    Extends the last observed value with the mean recent step and adds
    per-sample Gaussian jitter. The RNG is seeded from the context bytes and
    the horizon, so identical requests get identical samples in any process;
    there is no hidden state between requests.
    """

    TAIL = 32

    def sample_paths(self, context: np.ndarray, horizon: int, samples: int) -> np.ndarray:
        tail = context[-self.TAIL :]
        last = float(tail[-1])
        drift = float(np.mean(np.diff(tail))) if tail.size > 1 else 0.0
        spread = float(np.std(np.diff(tail))) if tail.size > 2 else 1.0
        seed = zlib.crc32(context.tobytes()) ^ (horizon * 0x9E3779B1)
        rng = np.random.default_rng(seed & 0xFFFFFFFF)
        steps = np.arange(1, horizon + 1, dtype=float)
        point = last + drift * steps
        noise = rng.normal(0.0, 0.1 * spread + 1e-9, size=(samples, horizon))
        return point[None, :] + np.cumsum(noise, axis=1)


class _ChronosModel:
    def __init__(self, config: BridgeConfig):
        try:
            import torch
            from chronos import ChronosPipeline
        except ImportError as exc:
            raise BridgeError(
                "chronos backend needs the chronos extra: "
                "pip install 'tsfm-bridge[chronos]'"
            ) from exc
        variant = config.variant or "amazon/chronos-t5-small"
        if "/" not in variant:
            variant = f"amazon/chronos-t5-{variant}"
        self._torch = torch
        self._pipeline = ChronosPipeline.from_pretrained(
            variant,
            device_map=config.device,
            torch_dtype=torch.float32,
            cache_dir=os.environ.get("TSFM_BRIDGE_CACHE"),
        )

    def sample_paths(self, context: np.ndarray, horizon: int, samples: int) -> np.ndarray:
        tensor = self._torch.tensor(context, dtype=self._torch.float32)
        out = self._pipeline.predict(tensor, horizon, num_samples=samples)
        # predict returns (series, samples, horizon) for a single series input
        return np.asarray(out[0].cpu().numpy(), dtype=float)


class _TimesFmModel:
    def __init__(self, config: BridgeConfig):
        try:
            import timesfm
        except ImportError as exc:
            raise BridgeError(
                "timesfm backend needs the timesfm extra: "
                "pip install 'tsfm-bridge[timesfm]'"
            ) from exc
        variant = config.variant or "google/timesfm-1.0-200m-pytorch"
        self._model = timesfm.TimesFm(
            hparams=timesfm.TimesFmHparams(
                backend="gpu" if config.device.startswith("cuda") else "cpu",
            ),
            checkpoint=timesfm.TimesFmCheckpoint(huggingface_repo_id=variant),
        )

    def sample_paths(self, context: np.ndarray, horizon: int, samples: int) -> np.ndarray:
        point, _ = self._model.forecast([context], freq=[0], horizon_len=horizon)
        # The released checkpoints expose point forecasts only; present the
        # single path as a degenerate sample set so the reduction is a no-op.
        path = np.asarray(point[0][:horizon], dtype=float)
        return np.repeat(path[None, :], samples, axis=0)


class _MoiraiModel:
    def __init__(self, config: BridgeConfig):
        try:
            import torch
            from uni2ts.model.moirai import MoiraiForecast, MoiraiModule
        except ImportError as exc:
            raise BridgeError(
                "moirai backend needs the moirai extra: "
                "pip install 'tsfm-bridge[moirai]'"
            ) from exc
        variant = config.variant or "Salesforce/moirai-1.1-R-small"
        self._torch = torch
        self._module = MoiraiModule.from_pretrained(
            variant, cache_dir=os.environ.get("TSFM_BRIDGE_CACHE")
        ).to(config.device)
        self._forecast_cls = MoiraiForecast
        self._device = config.device

    def sample_paths(self, context: np.ndarray, horizon: int, samples: int) -> np.ndarray:
        model = self._forecast_cls(
            module=self._module,
            prediction_length=horizon,
            context_length=context.size,
            patch_size="auto",
            num_samples=samples,
            target_dim=1,
            feat_dynamic_real_dim=0,
            past_feat_dynamic_real_dim=0,
        )
        past = self._torch.tensor(
            context[None, :, None], dtype=self._torch.float32, device=self._device
        )
        out = model(
            past_target=past,
            past_observed_target=self._torch.ones_like(past, dtype=self._torch.bool),
            past_is_pad=self._torch.zeros(
                past.shape[:2], dtype=self._torch.bool, device=self._device
            ),
        )
        return np.asarray(out[0].cpu().numpy(), dtype=float).reshape(samples, horizon)


_LOADERS = {
    "mock": lambda config: MockModel(),
    "chronos": _ChronosModel,
    "timesfm": _TimesFmModel,
    "moirai": _MoiraiModel,
}


def load_model(config: BridgeConfig):
    """Instantiate the configured backend; raises BridgeError on failure."""
    loader = _LOADERS[config.model_name]
    try:
        return loader(config)
    except BridgeError:
        raise
    except Exception as exc:
        raise BridgeError(
            f"failed to load model {config.model_name!r} "
            f"(variant {config.variant or 'default'!r}): {exc}"
        ) from exc
