"""Command-line interface.

Subcommands:

    forecast       run the adapter on the last history+horizon slice of a
                   dataset; writes a per-step CSV and a JSON run summary
    evaluate       benchmark methods over non-overlapping test windows
    ablate         run one of the ablation sweeps (pseudo | windows | geometry)
    gen-synthetic  emit a seeded synthetic dataset as CSV

Every library error class maps to a distinct exit code (table in the README);
failures print one machine-parseable JSON line on stderr. Outputs are written
atomically and are byte-identical across reruns with the same seed and a
built-in oracle.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import (
    ConfigError,
    CovAdaptError,
    DataError,
    DegenerateError,
    GeometryError,
    IoError,
    MissingColumnError,
    NumericalError,
    OracleError,
    ParseError,
)
from .harness import run_ablations, run_benchmark, write_atomic, write_synthetic_csv
from .ingest import config_from_dict, load_config, load_csv, make_test_windows
from .oracle import parse_oracle_selector
from .pipeline import AdapterConfig, run_adapter
from .synthetic import SyntheticSpec

__all__ = ["EXIT_CODES", "main"]

EXIT_CODES: dict[type, int] = {
    ConfigError: 3,
    DataError: 4,
    GeometryError: 5,
    IoError: 6,
    ParseError: 7,
    MissingColumnError: 8,
    OracleError: 9,
    NumericalError: 10,
    DegenerateError: 11,
    CovAdaptError: 12,
}
EXIT_UNEXPECTED = 13


def _fail(exc: BaseException) -> int:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)
    for klass, code in EXIT_CODES.items():
        if type(exc) is klass:
            return code
    return EXIT_CODES[CovAdaptError] if isinstance(exc, CovAdaptError) else EXIT_UNEXPECTED


def _config_overrides(args) -> dict:
    covariates = getattr(args, "covariates", None)
    return {
        "dataset.path": getattr(args, "data", None),
        "dataset.target": getattr(args, "target", None),
        "dataset.covariates": covariates,
        "task.history": getattr(args, "history", None),
        "task.horizon": getattr(args, "horizon", None),
        "task.min_context": getattr(args, "min_context", None),
        "task.seasonality": getattr(args, "seasonality", None),
        "task.lags": getattr(args, "lags", None),
        "task.pos_dim": getattr(args, "pos_dim", None),
        "oracle.kind": getattr(args, "oracle", None),
        "run.seed": getattr(args, "seed", None),
        "run.num_test_windows": getattr(args, "windows", None),
    }


def _add_config_flags(
    parser: argparse.ArgumentParser,
    with_windows: bool = True,
    repeatable_config: bool = False,
):
    if repeatable_config:
        parser.add_argument(
            "--config",
            action="append",
            help="TOML run config (repeat for several datasets)",
        )
    else:
        parser.add_argument("--config", help="TOML run config")
    parser.add_argument("--data", help="dataset CSV path (overrides config)")
    parser.add_argument("--target", help="target column name")
    parser.add_argument("--covariates", help="comma-separated covariate columns")
    parser.add_argument("--history", type=int, help="history length H")
    parser.add_argument("--horizon", type=int, help="horizon length F")
    parser.add_argument("--min-context", type=int, dest="min_context", help="minimum oracle context h")
    parser.add_argument("--seasonality", type=int, help="steps per season")
    parser.add_argument("--lags", type=int, help="lag feature count L")
    parser.add_argument("--pos-dim", type=int, dest="pos_dim", help="position encoding dimension")
    parser.add_argument(
        "--oracle",
        help="oracle selector: seasonal-naive | ar:<order> | exec:<command> | http:<url>",
    )
    parser.add_argument(
        "--strategy",
        choices=["zscore", "latest", "random"],
        help="window selection strategy (default zscore)",
    )
    parser.add_argument("--seed", type=int, help="seed for randomized choices")
    if with_windows:
        parser.add_argument("--windows", type=int, help="number of test windows")


def _load_run(args):
    if not args.config and not args.data:
        raise ConfigError("provide --config or --data")
    overrides = _config_overrides(args)
    if args.config:
        return load_config(args.config, overrides)
    # No config file: build the run from flags alone.
    for flag in ("data", "target", "history", "horizon", "seasonality"):
        if getattr(args, flag, None) is None:
            raise ConfigError(f"--{flag} is required without --config")
    return config_from_dict({}, overrides)


def _adapter_config(args) -> AdapterConfig:
    config = AdapterConfig()
    strategy = getattr(args, "strategy", None)
    if strategy:
        config = replace(config, window_strategy=strategy)
    return config


def _cmd_forecast(args) -> int:
    run = _load_run(args)
    dataset = replace(run.dataset, num_test_windows=1)
    table = load_csv(dataset)
    instance = make_test_windows(table, dataset)[0]
    oracle = parse_oracle_selector(run.oracle_selector(), dataset.seasonality)
    try:
        result = run_adapter(instance, run.task, oracle, _adapter_config(args))
    finally:
        oracle.close()

    H, F = run.task.history_len, run.task.horizon_len
    lines = ["t,point,variance,reverted"]
    for i in range(F):
        lines.append(
            f"{H + 1 + i},{float(result.point[i])!r},{float(result.variance[i])!r},"
            f"{int(result.reverted_mask[i])}"
        )
    out = Path(args.out)
    write_atomic(out, "\n".join(lines) + "\n")

    summary = {
        "oracle": run.oracle_selector(),
        "oracle_calls": result.oracle_calls,
        "reverted": result.reverted_count,
        "pseudo_smape": result.pseudo_smape,
        "degenerate_fallback": result.degenerate_fallback,
        "seed": run.seed,
        "diagnostics": result.diagnostics,
        "out": str(out),
    }
    write_atomic(out.with_suffix(".json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({F} steps, {result.reverted_count} reverted)")
    return 0


def _cmd_evaluate(args) -> int:
    if not args.config:
        raise ConfigError("evaluate requires --config (repeatable)")
    overrides = _config_overrides(args)
    runs = [load_config(path, overrides) for path in args.config]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_benchmark(
        runs,
        methods,
        report_dir=args.report_dir,
        jobs=args.jobs,
        adapter_config=_adapter_config(args),
    )
    print(
        f"wrote {report.csv_path} and {report.json_path} "
        f"({len(report.records)} records, {len(report.failures)} failures)"
    )
    return 0


def _parse_geometries(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            h, f = part.lower().split("x")
            out.append((int(h), int(f)))
        except ValueError:
            raise ConfigError(
                f"bad geometry {part!r}; expected HxF like 672x24"
            ) from None
    if not out:
        raise ConfigError("no geometries given")
    return tuple(out)


def _cmd_ablate(args) -> int:
    if not args.config:
        raise ConfigError("ablate requires --config")
    run = load_config(args.config, _config_overrides(args))
    kwargs = {}
    if args.geometries:
        kwargs["geometries"] = _parse_geometries(args.geometries)
    report = run_ablations(
        args.kind,
        run,
        report_dir=args.report_dir,
        jobs=args.jobs,
        adapter_config=_adapter_config(args),
        **kwargs,
    )
    print(
        f"wrote {report.csv_path} and {report.json_path} "
        f"({len(report.records)} records, {len(report.failures)} failures)"
    )
    return 0


def _cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec(
        length=args.length,
        seasonality=args.seasonality,
        amplitude=args.amplitude,
        coupling=args.coupling,
        noise_std=args.noise_std,
        covariate_lead=args.lead,
        seed=args.seed,
        oracle_covariate=args.oracle_covariate,
    )
    write_synthetic_csv(spec, args.out)
    print(f"wrote {args.out} ({args.length} rows, seed {args.seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covadapt",
        description="Adapt a black-box forecaster to exploit future-known covariates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fc = sub.add_parser("forecast", help="forecast the final window of a dataset")
    _add_config_flags(p_fc, with_windows=False)
    p_fc.add_argument("--out", required=True, help="forecast CSV path")
    p_fc.set_defaults(func=_cmd_forecast)

    p_ev = sub.add_parser("evaluate", help="benchmark methods over test windows")
    _add_config_flags(p_ev, repeatable_config=True)
    p_ev.add_argument(
        "--methods",
        default="adapter,oracle",
        help="comma-separated: adapter | oracle | direct-K | <oracle selector>",
    )
    p_ev.add_argument("--jobs", type=int, default=1, help="concurrent windows")
    p_ev.add_argument("--report-dir", default="reports", dest="report_dir")
    p_ev.set_defaults(func=_cmd_evaluate)

    p_ab = sub.add_parser("ablate", help="run an ablation sweep")
    _add_config_flags(p_ab)
    p_ab.add_argument(
        "--kind", required=True, choices=["pseudo", "windows", "geometry"]
    )
    p_ab.add_argument(
        "--geometries",
        help="geometry sweep override, comma-separated HxF (e.g. 288x24,288x48)",
    )
    p_ab.add_argument("--jobs", type=int, default=1, help="concurrent windows")
    p_ab.add_argument("--report-dir", default="reports", dest="report_dir")
    p_ab.set_defaults(func=_cmd_ablate)

    p_gs = sub.add_parser("gen-synthetic", help="emit a synthetic dataset CSV")
    p_gs.add_argument("--out", required=True)
    p_gs.add_argument("--length", type=int, default=720)
    p_gs.add_argument("--seasonality", type=int, default=24)
    p_gs.add_argument("--amplitude", type=float, default=10.0)
    p_gs.add_argument("--coupling", type=float, default=1.0)
    p_gs.add_argument("--noise-std", type=float, default=1.0, dest="noise_std")
    p_gs.add_argument("--lead", type=int, default=0)
    p_gs.add_argument("--seed", type=int, default=0)
    p_gs.add_argument(
        "--oracle-covariate",
        action="store_true",
        dest="oracle_covariate",
        help="use the target itself as the covariate",
    )
    p_gs.set_defaults(func=_cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CovAdaptError as exc:
        return _fail(exc)
    except Exception as exc:  # noqa: BLE001 - boundary: map to exit code
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
