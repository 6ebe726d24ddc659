import json
import subprocess

import pytest

from covadapt import CovAdaptError
from covadapt.cli import EXIT_CODES, EXIT_UNEXPECTED, _fail, main

SEASON = 12
GEN_FLAGS = ["--seasonality", str(SEASON), "--noise-std", "0.5"]
TASK_FLAGS = [
    "--target", "y",
    "--covariates", "x",
    "--history", "60",
    "--horizon", "4",
    "--seasonality", str(SEASON),
    "--min-context", "24",
    "--lags", "4",
]


def gen_dataset(tmp_path, length=80, seed=0, name="data.csv"):
    path = tmp_path / name
    rc = main(
        ["gen-synthetic", "--out", str(path), "--length", str(length), "--seed", str(seed)]
        + GEN_FLAGS
    )
    assert rc == 0
    return path


def forecast_args(data, out, extra=()):
    return ["forecast", "--data", str(data), *TASK_FLAGS, "--out", str(out), *extra]


def stderr_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


# -- exit codes ----------------------------------------------------------------


def test_exit_codes_are_distinct():
    codes = list(EXIT_CODES.values()) + [EXIT_UNEXPECTED, 0, 2]
    assert len(set(codes)) == len(codes)


def test_fail_maps_every_error_class(capsys):
    for klass, code in EXIT_CODES.items():
        assert _fail(klass("boom")) == code
        payload = stderr_error(capsys)
        assert payload == {"error": klass.__name__, "message": "boom"}


def test_fail_maps_unknown_subclass_to_base_code(capsys):
    class Wedged(CovAdaptError):
        pass

    assert _fail(Wedged("x")) == EXIT_CODES[CovAdaptError]
    capsys.readouterr()


def test_fail_maps_foreign_exception_to_unexpected(capsys):
    assert _fail(RuntimeError("x")) == EXIT_UNEXPECTED
    capsys.readouterr()


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exit_info:
        main(["--help"])
    assert exit_info.value.code == 0


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main([])
    assert exit_info.value.code == 2
    capsys.readouterr()


def test_bad_strategy_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(forecast_args("d.csv", tmp_path / "o.csv", ["--strategy", "newest"]))
    assert exit_info.value.code == 2
    capsys.readouterr()


def test_forecast_without_source_fails(capsys):
    assert main(["forecast", "--out", "o.csv"]) == 3
    assert stderr_error(capsys)["error"] == "ConfigError"


def test_forecast_missing_file(tmp_path, capsys):
    rc = main(forecast_args(tmp_path / "absent.csv", tmp_path / "o.csv"))
    assert rc == 6
    assert stderr_error(capsys)["error"] == "IoError"


def test_forecast_missing_column(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("y,z\n1.0,2.0\n")
    rc = main(forecast_args(path, tmp_path / "o.csv"))
    assert rc == 8
    assert stderr_error(capsys)["error"] == "MissingColumnError"


def test_forecast_unparseable_cell(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("y,x\n1.0,2.0\nbad,3.0\n")
    rc = main(forecast_args(path, tmp_path / "o.csv"))
    assert rc == 7
    payload = stderr_error(capsys)
    assert payload["error"] == "ParseError"
    assert "row 2" in payload["message"]


def test_forecast_short_dataset(tmp_path, capsys):
    rc = main(forecast_args(gen_dataset(tmp_path, length=50), tmp_path / "o.csv"))
    assert rc == 5
    assert stderr_error(capsys)["error"] == "GeometryError"


def test_forecast_unknown_oracle(tmp_path, capsys):
    data = gen_dataset(tmp_path)
    rc = main(forecast_args(data, tmp_path / "o.csv", ["--oracle", "prophet"]))
    assert rc == 3
    assert stderr_error(capsys)["error"] == "ConfigError"


def test_forecast_dead_oracle_process(tmp_path, capsys):
    data = gen_dataset(tmp_path)
    rc = main(forecast_args(data, tmp_path / "o.csv", ["--oracle", "exec:/bin/false"]))
    assert rc == 9
    assert stderr_error(capsys)["error"] == "OracleError"


def test_unwritable_output_is_unexpected_error(tmp_path, capsys):
    data = gen_dataset(tmp_path)
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a directory")
    rc = main(forecast_args(data, blocker / "o.csv"))
    assert rc == EXIT_UNEXPECTED
    capsys.readouterr()


# -- forecast ------------------------------------------------------------------


def test_forecast_writes_step_rows_and_summary(tmp_path, capsys):
    data = gen_dataset(tmp_path)
    out = tmp_path / "fc.csv"
    assert main(forecast_args(data, out, ["--seed", "7"])) == 0
    assert "wrote" in capsys.readouterr().out

    lines = out.read_text().splitlines()
    assert lines[0] == "t,point,variance,reverted"
    assert len(lines) == 5
    ts = [int(line.split(",")[0]) for line in lines[1:]]
    assert ts == [61, 62, 63, 64]
    for line in lines[1:]:
        _, point, variance, reverted = line.split(",")
        float(point)
        assert float(variance) >= 0.0
        assert reverted in ("0", "1")

    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["oracle"] == "seasonal-naive"
    assert summary["oracle_calls"] == 5
    assert summary["seed"] == 7
    assert summary["degenerate_fallback"] is False
    assert summary["out"] == str(out)
    assert summary["diagnostics"]["mode"] == "adapter"


def test_forecast_uses_only_the_trailing_window(tmp_path, capsys):
    data = gen_dataset(tmp_path, length=64, name="tail.csv")
    padded = tmp_path / "padded.csv"
    lines = data.read_text().splitlines()
    junk = ["0,0.0,0.0"] * 10
    padded.write_text("\n".join([lines[0], *junk, *lines[1:]]) + "\n")

    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(forecast_args(data, out_a)) == 0
    assert main(forecast_args(padded, out_b)) == 0
    capsys.readouterr()
    assert out_a.read_bytes() == out_b.read_bytes()


def test_flag_overrides_beat_config(tmp_path, capsys):
    data = gen_dataset(tmp_path)
    config = tmp_path / "run.toml"
    config.write_text(
        f"""
[dataset]
path = "{data}"
target = "y"
covariates = ["x"]

[task]
history = 60
horizon = 4
seasonality = {SEASON}
min_context = 24
lags = 4

[run]
seed = 1
"""
    )
    out = tmp_path / "fc.csv"
    rc = main(["forecast", "--config", str(config), "--seed", "9", "--out", str(out)])
    assert rc == 0
    capsys.readouterr()
    assert json.loads(out.with_suffix(".json").read_text())["seed"] == 9


# -- evaluate / ablate ---------------------------------------------------------


def write_eval_config(tmp_path, data, windows=2):
    config = tmp_path / "eval.toml"
    config.write_text(
        f"""
[dataset]
path = "{data}"
target = "y"
covariates = ["x"]

[task]
history = 60
horizon = 4
seasonality = {SEASON}
min_context = 24
lags = 4

[run]
num_test_windows = {windows}
"""
    )
    return config


def test_evaluate_writes_reports(tmp_path, capsys):
    config = write_eval_config(tmp_path, gen_dataset(tmp_path))
    report_dir = tmp_path / "reports"
    rc = main(
        [
            "evaluate",
            "--config", str(config),
            "--methods", "oracle,ar:1",
            "--report-dir", str(report_dir),
        ]
    )
    assert rc == 0
    assert "4 records, 0 failures" in capsys.readouterr().out
    assert (report_dir / "report.csv").exists()
    doc = json.loads((report_dir / "report.json").read_text())
    assert {r["method"] for r in doc["records"]} == {"oracle", "ar:1"}


def test_evaluate_requires_config(capsys):
    assert main(["evaluate", "--methods", "oracle"]) == 3
    capsys.readouterr()


def test_ablate_geometry_with_custom_grid(tmp_path, capsys):
    config = write_eval_config(tmp_path, gen_dataset(tmp_path), windows=1)
    report_dir = tmp_path / "reports"
    rc = main(
        [
            "ablate",
            "--config", str(config),
            "--kind", "geometry",
            "--geometries", "48x4",
            "--report-dir", str(report_dir),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    doc = json.loads((report_dir / "report.json").read_text())
    assert {r["dataset"] for r in doc["records"]} == {"data[H=48,F=4]"}


def test_ablate_rejects_bad_geometry(tmp_path, capsys):
    config = write_eval_config(tmp_path, gen_dataset(tmp_path))
    rc = main(
        ["ablate", "--config", str(config), "--kind", "geometry", "--geometries", "foo"]
    )
    assert rc == 3
    assert "HxF" in stderr_error(capsys)["message"]


def test_ablate_requires_config(capsys):
    assert main(["ablate", "--kind", "pseudo"]) == 3
    capsys.readouterr()


# -- reproducibility -----------------------------------------------------------


def test_gen_synthetic_is_byte_reproducible(tmp_path):
    a = gen_dataset(tmp_path, seed=5, name="a.csv")
    b = gen_dataset(tmp_path, seed=5, name="b.csv")
    c = gen_dataset(tmp_path, seed=6, name="c.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_cli_reruns_are_byte_identical(tmp_path):
    data = gen_dataset(tmp_path)
    outputs = []
    for name in ("r1.csv", "r2.csv"):
        out = tmp_path / name
        proc = subprocess.run(
            ["covadapt", *forecast_args(data, out, ["--seed", "3"])],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(out.with_suffix(".json").read_text())
        summary.pop("out")
        outputs.append((out.read_bytes(), summary))
    (csv_a, sum_a), (csv_b, sum_b) = outputs
    assert csv_a == csv_b
    assert sum_a == sum_b
