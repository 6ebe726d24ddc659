"""Serve a time-series foundation model over the stdio JSON-lines protocol."""

from .config import POINT_ESTIMATES, SUPPORTED_MODELS, BridgeConfig, BridgeError
from .models import MockModel, load_model
from .server import handle_request, selftest, serve

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "MockModel",
    "POINT_ESTIMATES",
    "SUPPORTED_MODELS",
    "handle_request",
    "load_model",
    "selftest",
    "serve",
]
