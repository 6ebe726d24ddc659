"""Bridge configuration.

One frozen config drives both serving and the selftest. The model cache
location is not part of the config; loaders read the TSFM_BRIDGE_CACHE
environment variable so the same flags work across machines.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["BridgeConfig", "BridgeError", "POINT_ESTIMATES", "SUPPORTED_MODELS"]

SUPPORTED_MODELS = ("mock", "chronos", "timesfm", "moirai")
POINT_ESTIMATES = ("median", "mean")


class BridgeError(Exception):
    """Any bridge-side failure: bad config, model load, bad model output."""


@dataclass(frozen=True)
class BridgeConfig:
    """Model choice plus how its samples become one point forecast.

    model_name:     one of SUPPORTED_MODELS; "mock" needs no weights.
    variant:        model size or checkpoint tag within the family, model
                    default when empty.
    device:         inference device token ("cpu", "cuda", "cuda:0", ...).
    point_estimate: reduce sampled paths by "median" (default) or "mean".
    max_context:    longest history passed to the model; longer requests
                    keep their most recent max_context values.
    samples:        sample paths drawn per request before reduction.
    """

    model_name: str
    variant: str = ""
    device: str = "cpu"
    point_estimate: str = "median"
    max_context: int = 2048
    samples: int = 20

    def __post_init__(self):
        if self.model_name not in SUPPORTED_MODELS:
            raise BridgeError(
                f"unsupported model {self.model_name!r}; "
                f"expected one of {', '.join(SUPPORTED_MODELS)}"
            )
        if self.point_estimate not in POINT_ESTIMATES:
            raise BridgeError(
                f"point_estimate must be median or mean, got {self.point_estimate!r}"
            )
        if self.max_context < 1:
            raise BridgeError(f"max_context must be >= 1, got {self.max_context}")
        if self.samples < 1:
            raise BridgeError(f"samples must be >= 1, got {self.samples}")
