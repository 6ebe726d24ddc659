"""Rolling evaluation, ablations, and report emission.

Methods are named by strings: "adapter" (the full pipeline), "oracle" (the
base forecaster used univariately), "direct-K" for K in {3,5,8} (the
ablation that trains the GP on labeled windows only), or any oracle selector
(e.g. "ar:2"), which evaluates that forecaster univariately as a baseline.

Reports are a CSV of per-window records with the fixed column set

    dataset,window,method,mae,rmse,smape,smape_nonzero,mase,oracle_calls,reverted

plus a JSON mirror carrying the same records (with pseudo-forecast SMAPE
where the method produces one), per-dataset aggregates, MAE gains vs. the
univariate oracle, failures, a config echo, and the seed. Numbers are
serialized with repr-roundtrip formatting and no timestamps, so re-running
with the same seed reproduces the files byte for byte. A window that fails
is recorded under "failures" and excluded from aggregates, never silently
dropped.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import TaskSpec, TimeSeriesInstance, default_lag_count, default_min_context
from .errors import ConfigError, CovAdaptError, DegenerateError
from .ingest import DatasetConfig, RunConfig, load_csv, make_test_windows
from .metrics import mae, mase, rmse, smape
from .oracle import Oracle, parse_oracle_selector
from .pipeline import AdapterConfig, run_adapter
from .synthetic import SyntheticSpec, synthesize

__all__ = [
    "EvaluationReport",
    "MetricRecord",
    "parse_report_csv",
    "render_report_csv",
    "run_ablations",
    "run_benchmark",
    "write_atomic",
    "write_synthetic_csv",
]

CSV_COLUMNS = (
    "dataset",
    "window",
    "method",
    "mae",
    "rmse",
    "smape",
    "smape_nonzero",
    "mase",
    "oracle_calls",
    "reverted",
)

ABLATION_KINDS = ("pseudo", "windows", "geometry")
DEFAULT_GEOMETRIES = ((672, 24), (672, 96), (672, 168), (1344, 24), (2016, 24))


@dataclass(frozen=True)
class MetricRecord:
    """One method on one test window. pseudo_smape rides along for the
    window-strategy ablation and only appears in the JSON report."""

    dataset: str
    window: int
    method: str
    mae: float
    rmse: float
    smape: float
    smape_nonzero: float | None
    mase: float | None
    oracle_calls: int
    reverted: int
    pseudo_smape: float | None = None

    def sort_key(self):
        return (self.dataset, self.window, self.method)


@dataclass(frozen=True)
class EvaluationReport:
    records: tuple[MetricRecord, ...]
    aggregates: dict
    gains: dict
    failures: tuple[dict, ...]
    config_echo: dict
    seed: int
    csv_path: str | None = None
    json_path: str | None = None


# -- single-window evaluation --------------------------------------------------


def _metrics_of(
    instance: TimeSeriesInstance, point: np.ndarray, calls: int, reverted: int
) -> dict:
    truth = instance.horizon_truth
    if truth is None:
        raise ConfigError("evaluation needs horizon_truth on every instance")
    try:
        s_nz = smape(truth, point, exclude_zero_truth=True)
    except DegenerateError:
        s_nz = None
    try:
        m = mase(truth, point, instance.target, instance.seasonality)
    except DegenerateError:
        m = None
    return {
        "mae": mae(truth, point),
        "rmse": rmse(truth, point),
        "smape": smape(truth, point),
        "smape_nonzero": s_nz,
        "mase": m,
        "oracle_calls": calls,
        "reverted": reverted,
    }


def _evaluate_window(
    dataset: str,
    window: int,
    method: str,
    instance: TimeSeriesInstance,
    spec: TaskSpec,
    oracle_factory,
    adapter_config: AdapterConfig,
) -> MetricRecord:
    pseudo_q = None
    # "adapter[zscore]" etc. label the window ablation; the strategy itself
    # arrives via adapter_config.
    if method == "adapter" or method.startswith("adapter["):
        oracle = oracle_factory()
        try:
            result = run_adapter(instance, spec, oracle, adapter_config)
        finally:
            oracle.close()
        point, calls, reverted = result.point, result.oracle_calls, result.reverted_count
        pseudo_q = result.pseudo_smape
    elif method.startswith("direct-"):
        try:
            k = int(method.split("-", 1)[1])
        except ValueError:
            raise ConfigError(f"bad direct-mode method {method!r}") from None
        config = replace(adapter_config, direct_mode=True, direct_mode_k=k)
        oracle = oracle_factory()
        try:
            result = run_adapter(instance, spec, oracle, config)
        finally:
            oracle.close()
        point, calls, reverted = result.point, result.oracle_calls, result.reverted_count
    elif method == "oracle":
        oracle = oracle_factory()
        try:
            forecast = oracle(instance.target, spec.horizon_len)
        finally:
            oracle.close()
        point, calls, reverted = forecast.mean, 1, 0
    else:
        oracle = parse_oracle_selector(method, instance.seasonality)
        try:
            forecast = oracle(instance.target, spec.horizon_len)
        finally:
            oracle.close()
        point, calls, reverted = forecast.mean, 1, 0

    return MetricRecord(
        dataset=dataset,
        window=window,
        method=method,
        pseudo_smape=pseudo_q,
        **_metrics_of(instance, point, calls, reverted),
    )


# -- aggregation ---------------------------------------------------------------

_AGG_FIELDS = ("mae", "rmse", "smape", "smape_nonzero", "mase")


def _aggregate(records) -> dict:
    """Mean over windows per (dataset, method); optional metrics average the
    windows where they are defined."""
    groups: dict[tuple[str, str], list[MetricRecord]] = {}
    for rec in records:
        groups.setdefault((rec.dataset, rec.method), []).append(rec)
    out: dict = {}
    for (dataset, method), recs in sorted(groups.items()):
        entry = {"windows": len(recs)}
        for name in _AGG_FIELDS:
            vals = [getattr(r, name) for r in recs if getattr(r, name) is not None]
            entry[name] = float(np.mean(vals)) if vals else None
        pseudo = [r.pseudo_smape for r in recs if r.pseudo_smape is not None]
        if pseudo:
            entry["pseudo_smape"] = float(np.mean(pseudo))
        out.setdefault(dataset, {})[method] = entry
    return out


def _gains(aggregates: dict, baseline: str = "oracle") -> dict:
    """Relative MAE improvement vs. the univariate oracle, per dataset and
    method, plus the cross-dataset average per method."""
    per_dataset: dict = {}
    for dataset, methods in aggregates.items():
        base = methods.get(baseline, {}).get("mae")
        if base is None or base == 0:
            continue
        for method, entry in methods.items():
            if method == baseline or entry.get("mae") is None:
                continue
            gain = (base - entry["mae"]) / base
            per_dataset.setdefault(dataset, {})[method] = gain
    averages: dict = {}
    for methods in per_dataset.values():
        for method, gain in methods.items():
            averages.setdefault(method, []).append(gain)
    return {
        "per_dataset": per_dataset,
        "average": {m: float(np.mean(v)) for m, v in sorted(averages.items())},
    }


# -- serialization -------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_report_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(
            [
                rec.dataset,
                rec.window,
                rec.method,
                _cell(rec.mae),
                _cell(rec.rmse),
                _cell(rec.smape),
                _cell(rec.smape_nonzero),
                _cell(rec.mase),
                rec.oracle_calls,
                rec.reverted,
            ]
        )
    return buf.getvalue()


def parse_report_csv(text: str) -> list[MetricRecord]:
    """Inverse of render_report_csv (pseudo_smape is CSV-invisible)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ConfigError(f"unexpected report header {header!r}")
    out = []
    for row in reader:
        out.append(
            MetricRecord(
                dataset=row[0],
                window=int(row[1]),
                method=row[2],
                mae=float(row[3]),
                rmse=float(row[4]),
                smape=float(row[5]),
                smape_nonzero=float(row[6]) if row[6] else None,
                mase=float(row[7]) if row[7] else None,
                oracle_calls=int(row[8]),
                reverted=int(row[9]),
            )
        )
    return out


def _record_json(rec: MetricRecord) -> dict:
    out = {
        "dataset": rec.dataset,
        "window": rec.window,
        "method": rec.method,
        "mae": rec.mae,
        "rmse": rec.rmse,
        "smape": rec.smape,
        "smape_nonzero": rec.smape_nonzero,
        "mase": rec.mase,
        "oracle_calls": rec.oracle_calls,
        "reverted": rec.reverted,
    }
    if rec.pseudo_smape is not None:
        out["pseudo_smape"] = rec.pseudo_smape
    return out


def write_atomic(path: str | Path, content: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partial file and failures leave any existing file intact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_report(report: EvaluationReport, report_dir: str | Path) -> EvaluationReport:
    report_dir = Path(report_dir)
    csv_path = report_dir / "report.csv"
    json_path = report_dir / "report.json"
    write_atomic(csv_path, render_report_csv(report.records))
    doc = {
        "records": [_record_json(r) for r in report.records],
        "aggregates": report.aggregates,
        "gains": report.gains,
        "failures": list(report.failures),
        "config": report.config_echo,
        "seed": report.seed,
    }
    write_atomic(json_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return replace(report, csv_path=str(csv_path), json_path=str(json_path))


# -- benchmark and ablation drivers -------------------------------------------


def _dataset_id(config: DatasetConfig) -> str:
    return Path(config.path).stem


def _build_report(tasks, jobs: int, config_echo: dict, seed: int) -> EvaluationReport:
    """tasks: list of (record_key, callable) where callable() -> MetricRecord."""
    records: list[MetricRecord] = []
    failures: list[dict] = []

    def run_one(entry):
        key, job = entry
        try:
            return job(), None
        except CovAdaptError as exc:
            return None, {
                "dataset": key[0],
                "window": key[1],
                "method": key[2],
                "error": type(exc).__name__,
                "message": str(exc),
            }

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, tasks))
    else:
        outcomes = [run_one(entry) for entry in tasks]

    for record, failure in outcomes:
        if record is not None:
            records.append(record)
        else:
            failures.append(failure)

    records.sort(key=MetricRecord.sort_key)
    failures.sort(key=lambda f: (f["dataset"], f["window"], f["method"]))
    aggregates = _aggregate(records)
    return EvaluationReport(
        records=tuple(records),
        aggregates=aggregates,
        gains=_gains(aggregates),
        failures=tuple(failures),
        config_echo=config_echo,
        seed=seed,
    )


def _window_tasks(
    dataset_id: str,
    instances,
    task: TaskSpec,
    methods,
    oracle_factory,
    adapter_config: AdapterConfig,
):
    tasks = []
    for w, instance in enumerate(instances):
        spec = replace(task, seed=task.seed + w)
        for method in methods:
            key = (dataset_id, w, method)
            tasks.append(
                (
                    key,
                    lambda inst=instance, sp=spec, m=method, ww=w: _evaluate_window(
                        dataset_id, ww, m, inst, sp, oracle_factory, adapter_config
                    ),
                )
            )
    return tasks


def _default_factory(run: RunConfig):
    selector = run.oracle_selector()
    seasonality = run.dataset.seasonality

    def factory() -> Oracle:
        return parse_oracle_selector(selector, seasonality)

    return factory


def run_benchmark(
    runs: list[RunConfig],
    methods: list[str],
    report_dir: str | Path | None = None,
    jobs: int = 1,
    adapter_config: AdapterConfig | None = None,
    oracle_factory=None,
) -> EvaluationReport:
    """Evaluate every method on every test window of every dataset."""
    if not runs:
        raise ConfigError("run_benchmark needs at least one run config")
    if not methods:
        raise ConfigError("run_benchmark needs at least one method")
    adapter_config = adapter_config or AdapterConfig()

    tasks = []
    for run in runs:
        table = load_csv(run.dataset)
        instances = make_test_windows(table, run.dataset)
        factory = oracle_factory or _default_factory(run)
        tasks.extend(
            _window_tasks(
                _dataset_id(run.dataset),
                instances,
                run.task,
                methods,
                factory,
                adapter_config,
            )
        )

    echo = {
        "methods": list(methods),
        "datasets": [_dataset_id(r.dataset) for r in runs],
        "window_strategy": adapter_config.window_strategy,
        "jobs": jobs,
    }
    report = _build_report(tasks, jobs, echo, runs[0].seed)
    if report_dir is not None:
        report = _write_report(report, report_dir)
    return report


def run_ablations(
    kind: str,
    run: RunConfig,
    report_dir: str | Path | None = None,
    jobs: int = 1,
    adapter_config: AdapterConfig | None = None,
    oracle_factory=None,
    geometries=DEFAULT_GEOMETRIES,
) -> EvaluationReport:
    """Ablation sweeps over one dataset.

    pseudo:   adapter vs. direct-{3,5,8} (generator contribution);
    windows:  adapter under zscore/latest/random, with pseudo-forecast SMAPE
              carried on each adapter record;
    geometry: adapter vs. oracle across (history, horizon) pairs; the default
              sweep mirrors the large-history grid and is expensive at full
              size, so callers may pass a smaller `geometries`.
    """
    if kind not in ABLATION_KINDS:
        raise ConfigError(f"unknown ablation kind {kind!r}; expected {ABLATION_KINDS}")
    adapter_config = adapter_config or AdapterConfig()
    factory = oracle_factory or _default_factory(run)
    echo = {"ablation": kind, "dataset": _dataset_id(run.dataset), "jobs": jobs}

    if kind == "pseudo":
        table = load_csv(run.dataset)
        instances = make_test_windows(table, run.dataset)
        methods = ["adapter", "direct-3", "direct-5", "direct-8"]
        tasks = _window_tasks(
            _dataset_id(run.dataset),
            instances,
            run.task,
            methods,
            factory,
            adapter_config,
        )
        echo["methods"] = methods
    elif kind == "windows":
        table = load_csv(run.dataset)
        instances = make_test_windows(table, run.dataset)
        dataset_id = _dataset_id(run.dataset)
        tasks = []
        for strategy in ("zscore", "latest", "random"):
            config = replace(adapter_config, window_strategy=strategy)
            for w, instance in enumerate(instances):
                spec = replace(run.task, seed=run.task.seed + w)
                method = f"adapter[{strategy}]"
                tasks.append(
                    (
                        (dataset_id, w, method),
                        lambda inst=instance, sp=spec, m=method, cf=config, ww=w: _evaluate_window(
                            dataset_id, ww, m, inst, sp, factory, cf
                        ),
                    )
                )
        echo["strategies"] = ["zscore", "latest", "random"]
    else:
        tasks = []
        base = run.dataset
        table = load_csv(base)
        for H, F in geometries:
            ds = replace(base, history_len=H, horizon_len=F)
            dataset_id = f"{_dataset_id(base)}[H={H},F={F}]"
            min_context = default_min_context(H, F, base.seasonality)
            task = TaskSpec(
                history_len=H,
                horizon_len=F,
                min_context=min_context,
                lag_count=default_lag_count(base.seasonality, min_context),
                pos_dim=run.task.pos_dim,
                seed=run.task.seed,
            )
            instances = make_test_windows(table, ds)
            tasks.extend(
                _window_tasks(
                    dataset_id, instances, task, ["adapter", "oracle"], factory,
                    adapter_config,
                )
            )
        echo["geometries"] = [list(g) for g in geometries]

    report = _build_report(tasks, jobs, echo, run.seed)
    if report_dir is not None:
        report = _write_report(report, report_dir)
    return report


# -- synthetic CSV -------------------------------------------------------------


def write_synthetic_csv(spec: SyntheticSpec, path: str | Path) -> None:
    """Emit the synthetic series as t,y,x rows, byte-reproducible per seed."""
    y, x = synthesize(spec)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "y", "x"])
    for i in range(spec.length):
        writer.writerow([i + 1, repr(float(y[i])), repr(float(x[i]))])
    write_atomic(path, buf.getvalue())
