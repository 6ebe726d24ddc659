"""Dataset loading and run configuration.

CSV: comma-separated, UTF-8, header row required, '.' decimal point. Only the
referenced target and covariate columns are parsed as numbers; anything else
(timestamps included) is carried past. Parse failures name the 1-based data
row and the column.

Config files are TOML with three tables. Keys:

    [dataset]  path, target, covariates (list), frequency (optional)
    [task]     history, horizon, min_context (optional), seasonality,
               lags (optional), pos_dim (optional)
    [oracle]   kind, endpoint (optional)
    [run]      seed (optional), num_test_windows (optional)

Omitted task values fall back to the geometry defaults in core.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .core import TaskSpec, TimeSeriesInstance, default_lag_count, default_min_context
from .errors import (
    ConfigError,
    GeometryError,
    IoError,
    MissingColumnError,
    ParseError,
)

__all__ = [
    "DatasetConfig",
    "RunConfig",
    "Table",
    "config_from_dict",
    "load_config",
    "load_csv",
    "make_test_windows",
]


@dataclass(frozen=True)
class DatasetConfig:
    path: str
    target_column: str
    covariate_columns: tuple[str, ...]
    frequency: str = "1H"
    seasonality: int = 24
    history_len: int = 672
    horizon_len: int = 24
    num_test_windows: int = 1

    def __post_init__(self):
        if self.target_column in self.covariate_columns:
            raise ConfigError(
                f"target column {self.target_column!r} repeated in covariates"
            )
        if self.num_test_windows < 1:
            raise ConfigError(
                f"num_test_windows must be >= 1, got {self.num_test_windows}"
            )


@dataclass(frozen=True)
class Table:
    """Referenced columns in file order, plus the file's row count."""

    columns: dict[str, np.ndarray]
    n_rows: int

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise MissingColumnError(f"column {name!r} not loaded")
        return self.columns[name]


def load_csv(config: DatasetConfig) -> Table:
    path = Path(config.path)
    wanted = [config.target_column, *config.covariate_columns]
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty; header row required") from None
        header = [name.strip() for name in header]

        missing = [name for name in wanted if name not in header]
        if missing:
            raise MissingColumnError(
                f"{path} lacks column(s) {', '.join(repr(m) for m in missing)}"
            )
        indices = {name: header.index(name) for name in wanted}
        ordered = sorted(set(wanted), key=header.index)

        values: dict[str, list[float]] = {name: [] for name in ordered}
        row_count = 0
        for row_num, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path} row {row_num}: {len(row)} cells, header has {len(header)}",
                    row=row_num,
                )
            row_count += 1
            for name in ordered:
                cell = row[indices[name]].strip()
                try:
                    val = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path} row {row_num}, column {name!r}: cannot parse {cell!r}",
                        row=row_num,
                        column=name,
                    ) from None
                if not np.isfinite(val):
                    raise ParseError(
                        f"{path} row {row_num}, column {name!r}: non-finite value {cell!r}",
                        row=row_num,
                        column=name,
                    )
                values[name].append(val)

    columns = {name: np.asarray(values[name], dtype=float) for name in ordered}
    return Table(columns=columns, n_rows=row_count)


def make_test_windows(table: Table, config: DatasetConfig) -> list[TimeSeriesInstance]:
    """Cut num_test_windows instances whose horizons tile backward from the
    table end: window i's horizon covers rows (T - (W - i)F, T - (W - i - 1)F],
    its history the H rows before. Horizons are disjoint and adjacent."""
    H, F, W = config.history_len, config.horizon_len, config.num_test_windows
    T = table.n_rows
    needed = H + W * F
    if T < needed:
        raise GeometryError(
            f"table has {T} rows; {needed} needed for {W} windows of "
            f"history {H} + horizon {F}"
        )

    target = table.column(config.target_column)
    cov_cols = [table.column(name) for name in config.covariate_columns]
    instances = []
    for i in range(W):
        horizon_start = T - (W - i) * F
        lo = horizon_start - H
        hi = horizon_start + F
        if cov_cols:
            cov = np.column_stack([col[lo:hi] for col in cov_cols])
        else:
            cov = np.empty((hi - lo, 0))
        instances.append(
            TimeSeriesInstance(
                target=target[lo:horizon_start],
                covariates=cov,
                horizon_len=F,
                seasonality=config.seasonality,
                frequency=config.frequency,
                horizon_truth=target[horizon_start:hi],
            )
        )
    return instances


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs: where the data is, the task geometry, the
    oracle selector, and run-level settings."""

    dataset: DatasetConfig
    task: TaskSpec
    oracle_kind: str
    oracle_endpoint: str | None
    seed: int

    def oracle_selector(self) -> str:
        kind = self.oracle_kind
        if kind in ("exec", "http") and self.oracle_endpoint:
            return f"{kind}:{self.oracle_endpoint}"
        return kind


def _req(section: dict, table: str, key: str):
    if key not in section:
        raise ConfigError(f"config missing {table}.{key}")
    return section[key]


def _typed(value, kinds, label: str):
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ConfigError(f"config value {label} has wrong type: {value!r}")
    return value


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse a TOML run config; `overrides` (flat dotted keys like
    "task.history") win over file values."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"config {path}: {exc}") from exc
    return config_from_dict(doc, overrides)


def config_from_dict(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an already-parsed document (possibly empty,
    with everything supplied through overrides)."""
    doc = {table: dict(section) for table, section in doc.items()}
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        table, _, key = dotted.partition(".")
        doc.setdefault(table, {})[key] = value

    dataset_t = doc.get("dataset", {})
    task_t = doc.get("task", {})
    oracle_t = doc.get("oracle", {})
    run_t = doc.get("run", {})

    covariates = dataset_t.get("covariates", [])
    if isinstance(covariates, str):
        covariates = [c.strip() for c in covariates.split(",") if c.strip()]
    if not isinstance(covariates, list) or not all(
        isinstance(c, str) for c in covariates
    ):
        raise ConfigError("dataset.covariates must be a list of column names")

    history = int(_typed(_req(task_t, "task", "history"), int, "task.history"))
    horizon = int(_typed(_req(task_t, "task", "horizon"), int, "task.horizon"))
    seasonality = int(
        _typed(_req(task_t, "task", "seasonality"), int, "task.seasonality")
    )
    min_context = task_t.get("min_context")
    if min_context is None:
        min_context = default_min_context(history, horizon, seasonality)
    min_context = int(_typed(min_context, int, "task.min_context"))
    lags = task_t.get("lags")
    if lags is None:
        lags = default_lag_count(seasonality, min_context)
    lags = int(_typed(lags, int, "task.lags"))
    pos_dim = int(_typed(task_t.get("pos_dim", 8), int, "task.pos_dim"))
    seed = int(_typed(run_t.get("seed", 0), int, "run.seed"))

    dataset = DatasetConfig(
        path=str(_req(dataset_t, "dataset", "path")),
        target_column=str(_req(dataset_t, "dataset", "target")),
        covariate_columns=tuple(covariates),
        frequency=str(dataset_t.get("frequency", "1H")),
        seasonality=seasonality,
        history_len=history,
        horizon_len=horizon,
        num_test_windows=int(
            _typed(run_t.get("num_test_windows", 1), int, "run.num_test_windows")
        ),
    )
    task = TaskSpec(
        history_len=history,
        horizon_len=horizon,
        min_context=min_context,
        lag_count=lags,
        pos_dim=pos_dim,
        seed=seed,
    )
    endpoint = oracle_t.get("endpoint")
    if endpoint is not None:
        endpoint = str(endpoint)
    return RunConfig(
        dataset=dataset,
        task=task,
        oracle_kind=str(oracle_t.get("kind", "seasonal-naive")),
        oracle_endpoint=endpoint,
        seed=seed,
    )
