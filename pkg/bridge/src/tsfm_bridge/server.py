"""The stdio serving loop and the selftest.

Protocol, shared with the consumer side: one JSON object per line on stdin,

    {"id": 7, "history": [..floats..], "horizon": 24}

answered by exactly one line on stdout, either

    {"id": 7, "mean": [..horizon floats..]}

or {"id": 7, "error": "..."} when that request failed. The loop never dies on
a bad request; only startup problems (model load) abort the process. stdout
carries nothing but reply lines; all logging goes to stderr. Requests are
handled strictly sequentially, model inference dominates anyway.
"""

from __future__ import annotations

import json
import sys
import time

import numpy as np

from .config import BridgeConfig, BridgeError
from .models import load_model

__all__ = ["handle_request", "selftest", "serve"]


def _log(message: str) -> None:
    print(f"tsfm-bridge: {message}", file=sys.stderr, flush=True)


def _point_forecast(model, config: BridgeConfig, context: np.ndarray, horizon: int):
    paths = np.asarray(
        model.sample_paths(context, horizon, config.samples), dtype=float
    )
    if paths.shape != (config.samples, horizon):
        raise BridgeError(
            f"model returned shape {paths.shape}, expected {(config.samples, horizon)}"
        )
    if not np.all(np.isfinite(paths)):
        bad = int(np.argwhere(~np.all(np.isfinite(paths), axis=0))[0][0])
        raise BridgeError(f"model output is non-finite at horizon step {bad + 1}")
    reduce = np.median if config.point_estimate == "median" else np.mean
    return reduce(paths, axis=0)


def handle_request(raw: str, model, config: BridgeConfig) -> str:
    """Turn one request line into one reply line, never raising."""
    request_id = None
    try:
        try:
            request = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"malformed request JSON: {exc}") from exc
        if not isinstance(request, dict):
            raise BridgeError("request must be a JSON object")
        request_id = request.get("id")

        history = request.get("history")
        if not isinstance(history, list) or not history:
            raise BridgeError("request needs a non-empty 'history' list")
        context = np.asarray(history, dtype=float)
        if context.ndim != 1 or not np.all(np.isfinite(context)):
            raise BridgeError("'history' must be a flat list of finite numbers")

        horizon = request.get("horizon")
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
            raise BridgeError(f"'horizon' must be a positive integer, got {horizon!r}")

        # Keep the most recent values when the context exceeds the limit.
        if context.size > config.max_context:
            context = context[-config.max_context :]

        mean = _point_forecast(model, config, context, horizon)
        return json.dumps({"id": request_id, "mean": [float(v) for v in mean]})
    except Exception as exc:  # noqa: BLE001 - per-request errors become replies
        return json.dumps({"id": request_id, "error": str(exc)})


def serve(config: BridgeConfig, stdin=None, stdout=None) -> int:
    """Answer requests until stdin closes. Returns the process exit code."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    try:
        model = load_model(config)
    except BridgeError as exc:
        _log(f"startup failed: {exc}")
        return 1
    _log(
        f"serving {config.model_name} (variant {config.variant or 'default'}, "
        f"device {config.device}, point {config.point_estimate}, "
        f"max_context {config.max_context}, samples {config.samples})"
    )
    served = 0
    for line in stdin:
        if not line.strip():
            continue
        reply = handle_request(line, model, config)
        print(reply, file=stdout, flush=True)
        served += 1
        if '"error"' in reply:
            _log(f"request failed: {reply}")
    _log(f"stdin closed after {served} requests, shutting down")
    return 0


def selftest(config: BridgeConfig) -> int:
    """Run a canned request through the loaded model; 0 when healthy."""
    print(f"loading {config.model_name} (variant {config.variant or 'default'})")
    try:
        model = load_model(config)
    except BridgeError as exc:
        print(f"selftest failed at load: {exc}", file=sys.stderr)
        if config.model_name != "mock":
            print(
                "hint: weights download on first use; check network access, "
                "the model extra, and TSFM_BRIDGE_CACHE",
                file=sys.stderr,
            )
        return 1

    t = np.arange(512, dtype=float)
    wave = np.sin(2.0 * np.pi * t / 24.0) + 0.01 * t
    horizon = 24
    started = time.perf_counter()
    try:
        mean = _point_forecast(model, config, wave, horizon)
    except BridgeError as exc:
        print(f"selftest failed at forecast: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - started

    if mean.shape != (horizon,):
        print(
            f"selftest failed: reply length {mean.size} != horizon {horizon}",
            file=sys.stderr,
        )
        return 1
    print(f"ok: {horizon} finite values in {elapsed * 1e3:.1f} ms")
    return 0
