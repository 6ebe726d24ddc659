"""Black-box base-forecaster interface with strict call accounting.

Every forecaster behind the adapter is an Oracle: it answers point forecasts
for a requested context and horizon, and its CallLedger counts every attempt
(completions and failures alike). Built-in baselines cover desk-scale runs;
external processes and HTTP endpoints speak a newline-delimited JSON protocol:

    request:  {"id": int, "history": [float, ...], "horizon": int}
    success:  {"id": int, "mean": [float, ...]}
    failure:  {"id": int, "error": "message"}

One JSON object per line, UTF-8. Replies are matched by id and validated for
length and finiteness; a wrong-length reply is an error, never padded.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
import time
import urllib.error
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from queue import Empty, Queue

import numpy as np

from .errors import ConfigError, GeometryError, OracleError

__all__ = [
    "AutoRegressiveOracle",
    "CallLedger",
    "HttpOracle",
    "Oracle",
    "OracleForecast",
    "OracleRequest",
    "ProcessOracle",
    "SeasonalNaiveOracle",
    "builtin_ar",
    "builtin_seasonal_naive",
    "external_process_oracle",
    "http_oracle",
    "parse_oracle_selector",
]

DEFAULT_TIMEOUT = 120.0


@dataclass(frozen=True)
class OracleRequest:
    """One forecast request: context Y_{1:t}, horizon, and a caller id."""

    context: np.ndarray
    horizon: int
    request_id: int

    def __post_init__(self):
        context = np.asarray(self.context, dtype=float)
        if context.ndim != 1 or context.size == 0:
            raise GeometryError("oracle context must be a nonempty 1-d sequence")
        if self.horizon < 1:
            raise GeometryError(f"oracle horizon must be >= 1, got {self.horizon}")
        object.__setattr__(self, "context", context)


@dataclass(frozen=True)
class OracleForecast:
    """A point forecast of exactly `horizon` finite values."""

    mean: np.ndarray
    request_id: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)


@dataclass
class CallLedger:
    """Monotone record of oracle invocations, one entry per attempt."""

    per_call_context_lengths: list[int] = field(default_factory=list)

    @property
    def calls(self) -> int:
        return len(self.per_call_context_lengths)

    def record(self, context_length: int) -> None:
        self.per_call_context_lengths.append(int(context_length))


class Oracle:
    """Abstract base forecaster. Subclasses implement _forecast().

    forecast() records the attempt in the ledger before dispatch, so failed
    calls are still counted, then validates the reply shape and finiteness.
    """

    def __init__(self):
        self.ledger = CallLedger()
        self._next_id = 0

    def forecast(self, request: OracleRequest) -> OracleForecast:
        self.ledger.record(request.context.size)
        mean = np.asarray(self._forecast(request), dtype=float)
        if mean.ndim != 1 or mean.size != request.horizon:
            raise OracleError(
                f"oracle returned {mean.size} values for horizon {request.horizon}"
            )
        if not np.all(np.isfinite(mean)):
            raise OracleError("oracle returned non-finite values")
        return OracleForecast(mean=mean, request_id=request.request_id)

    def __call__(self, context, horizon: int) -> OracleForecast:
        request = OracleRequest(
            context=np.asarray(context, dtype=float),
            horizon=horizon,
            request_id=self._next_id,
        )
        self._next_id += 1
        return self.forecast(request)

    def _forecast(self, request: OracleRequest) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class SeasonalNaiveOracle(Oracle):
    """Repeat the last observed season."""

    def __init__(self, seasonality: int):
        super().__init__()
        if seasonality < 1:
            raise ConfigError(f"seasonality must be >= 1, got {seasonality}")
        self.seasonality = seasonality

    def _forecast(self, request: OracleRequest) -> np.ndarray:
        s = self.seasonality
        context = request.context
        if context.size < s:
            raise GeometryError(
                f"seasonal-naive needs context >= {s}, got {context.size}"
            )
        season = context[context.size - s :]
        reps = -(-request.horizon // s)
        return np.tile(season, reps)[: request.horizon]


class AutoRegressiveOracle(Oracle):
    """Ridge-regularized autoregression refit on every context.

    Fits y_t ~ [y_{t-order} .. y_{t-1}, 1] by least squares with a small
    ridge penalty, then rolls the fitted recurrence forward.
    """

    def __init__(self, order: int, ridge_penalty: float = 1e-8):
        super().__init__()
        if order < 1:
            raise ConfigError(f"AR order must be >= 1, got {order}")
        if ridge_penalty < 0:
            raise ConfigError("ridge_penalty must be >= 0")
        self.order = order
        self.ridge_penalty = ridge_penalty

    def _forecast(self, request: OracleRequest) -> np.ndarray:
        order = self.order
        y = request.context
        if y.size < order + 1:
            raise GeometryError(
                f"AR({order}) needs context >= {order + 1}, got {y.size}"
            )
        rows = y.size - order
        X = np.empty((rows, order + 1), dtype=float)
        for j in range(order):
            X[:, j] = y[j : j + rows]
        X[:, order] = 1.0
        target = y[order:]
        gram = X.T @ X + self.ridge_penalty * np.eye(order + 1)
        coef = np.linalg.solve(gram, X.T @ target)

        state = deque(y[y.size - order :], maxlen=order)
        out = np.empty(request.horizon, dtype=float)
        for i in range(request.horizon):
            nxt = float(np.dot(coef[:order], np.array(state)) + coef[order])
            out[i] = nxt
            state.append(nxt)
        return out


class ProcessOracle(Oracle):
    """JSON-lines client around a forecaster subprocess.

    The child reads one request per line on stdin and answers one reply per
    line on stdout; stderr is collected for error reporting. Requests are
    strictly sequential on a connection.
    """

    def __init__(self, command: str | list[str], timeout: float = DEFAULT_TIMEOUT):
        super().__init__()
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ConfigError("empty oracle command")
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise OracleError(f"cannot spawn oracle process {argv[0]!r}: {exc}") from exc
        self._replies: Queue[str] = Queue()
        self._stderr_tail: deque[str] = deque(maxlen=50)
        threading.Thread(target=self._read_stdout, daemon=True).start()
        threading.Thread(target=self._read_stderr, daemon=True).start()

    def _read_stdout(self) -> None:
        for line in self._proc.stdout:
            self._replies.put(line)
        self._replies.put("")

    def _read_stderr(self) -> None:
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _fail(self, message: str) -> OracleError:
        tail = "; ".join(list(self._stderr_tail)[-3:])
        if tail:
            message = f"{message} (stderr: {tail})"
        return OracleError(message)

    def _forecast(self, request: OracleRequest) -> np.ndarray:
        if self._proc.poll() is not None:
            raise self._fail(
                f"oracle process exited with code {self._proc.returncode}"
            )
        line = json.dumps(
            {
                "id": request.request_id,
                "history": request.context.tolist(),
                "horizon": request.horizon,
            }
        )
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise self._fail(f"oracle process pipe closed: {exc}") from exc

        deadline = time.monotonic() + self.timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise self._fail(f"oracle timed out after {self.timeout:.0f}s")
            try:
                raw = self._replies.get(timeout=min(remaining, 0.5))
            except Empty:
                continue
            if raw == "":
                raise self._fail("oracle process closed stdout")
            if raw.strip():
                return _parse_reply(raw, request)

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.terminate()
            try:
                proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()


class HttpOracle(Oracle):
    """JSON client POSTing one request per call to a forecaster endpoint."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        super().__init__()
        if not endpoint:
            raise ConfigError("empty oracle endpoint")
        self.endpoint = endpoint
        self.timeout = timeout

    def _forecast(self, request: OracleRequest) -> np.ndarray:
        body = json.dumps(
            {
                "id": request.request_id,
                "history": request.context.tolist(),
                "horizon": request.horizon,
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise OracleError(f"oracle endpoint {self.endpoint} failed: {exc}") from exc
        return _parse_reply(raw, request)


def _parse_reply(raw: str, request: OracleRequest) -> np.ndarray:
    try:
        reply = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise OracleError(f"malformed oracle reply: {raw[:200]!r}") from exc
    if not isinstance(reply, dict):
        raise OracleError(f"oracle reply is not an object: {raw[:200]!r}")
    if reply.get("id") != request.request_id:
        raise OracleError(
            f"oracle reply id {reply.get('id')!r} does not match request {request.request_id}"
        )
    if "error" in reply:
        raise OracleError(f"oracle reported: {reply['error']}")
    mean = reply.get("mean")
    if not isinstance(mean, list):
        raise OracleError("oracle reply missing 'mean' list")
    return np.asarray(mean, dtype=float)


def builtin_seasonal_naive(seasonality: int) -> SeasonalNaiveOracle:
    return SeasonalNaiveOracle(seasonality)


def builtin_ar(order: int, ridge_penalty: float = 1e-8) -> AutoRegressiveOracle:
    return AutoRegressiveOracle(order, ridge_penalty)


def external_process_oracle(
    command: str | list[str], timeout: float = DEFAULT_TIMEOUT
) -> ProcessOracle:
    return ProcessOracle(command, timeout)


def http_oracle(endpoint: str, timeout: float = DEFAULT_TIMEOUT) -> HttpOracle:
    return HttpOracle(endpoint, timeout)


def parse_oracle_selector(
    selector: str, seasonality: int, timeout: float = DEFAULT_TIMEOUT
) -> Oracle:
    """Build an oracle from a CLI selector.

    Forms: "seasonal-naive" | "ar:<order>" | "exec:<command>" | "http:<url>"
    (a bare http(s):// URL is accepted as shorthand for the http form).
    """
    if selector == "seasonal-naive":
        return builtin_seasonal_naive(seasonality)
    if selector.startswith("ar:"):
        try:
            order = int(selector[3:])
        except ValueError:
            raise ConfigError(f"bad AR order in selector {selector!r}") from None
        return builtin_ar(order)
    if selector.startswith("exec:"):
        command = selector[5:]
        if not command.strip():
            raise ConfigError("exec: selector needs a command")
        return external_process_oracle(command, timeout)
    if selector.startswith(("http://", "https://")):
        return http_oracle(selector, timeout)
    if selector.startswith("http:"):
        return http_oracle(selector[5:], timeout)
    raise ConfigError(
        f"unknown oracle selector {selector!r}; expected seasonal-naive, "
        "ar:<order>, exec:<command>, or http:<url>"
    )
