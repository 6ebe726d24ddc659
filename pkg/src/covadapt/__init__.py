"""covadapt: make a black-box univariate forecaster covariate-aware.

Given a single forecasting instance (history, future-known covariates) and an
oracle forecaster reachable only through forecast calls, the adapter spends a
constant, small call budget to learn an instance-level correction: a cheap
regressor imitates the oracle over the whole history, and a Gaussian process
trained on those pseudo-forecasts plus the covariates refines the horizon
forecast, reverting to the oracle wherever its own uncertainty is too high.
"""

from .core import (
    ForecastResult,
    TaskSpec,
    TimeSeriesInstance,
    default_lag_count,
    default_min_context,
    validate_instance,
)
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
from .features import WindowChoice, lag_matrix, positional_encoding, select_windows
from .gp import (
    AdapterFeatures,
    GPAdapterModel,
    KernelConfig,
    KernelParams,
    SearchSpace,
    gp_fit,
    gp_predict,
    kernel_eval,
    tune_gp,
)
from .harness import (
    EvaluationReport,
    MetricRecord,
    run_ablations,
    run_benchmark,
    write_synthetic_csv,
)
from .ingest import DatasetConfig, RunConfig, load_config, load_csv, make_test_windows
from .metrics import mae, mase, rmse, smape
from .oracle import (
    CallLedger,
    Oracle,
    OracleForecast,
    OracleRequest,
    builtin_ar,
    builtin_seasonal_naive,
    external_process_oracle,
    http_oracle,
    parse_oracle_selector,
)
from .pipeline import AdapterConfig, run_adapter, tune_filter_threshold, uncertainty_filter
from .pseudogen import (
    BayesRidgeModel,
    PseudoForecasts,
    build_stage1_training_set,
    fit_bayes_ridge,
    generate_pseudo_forecasts,
)
from .synthetic import SyntheticSpec, make_instance, synthesize

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterFeatures",
    "BayesRidgeModel",
    "CallLedger",
    "ConfigError",
    "CovAdaptError",
    "DataError",
    "DatasetConfig",
    "DegenerateError",
    "EvaluationReport",
    "ForecastResult",
    "GPAdapterModel",
    "GeometryError",
    "IoError",
    "KernelConfig",
    "KernelParams",
    "MetricRecord",
    "MissingColumnError",
    "NumericalError",
    "Oracle",
    "OracleError",
    "OracleForecast",
    "OracleRequest",
    "ParseError",
    "PseudoForecasts",
    "RunConfig",
    "SearchSpace",
    "SyntheticSpec",
    "TaskSpec",
    "TimeSeriesInstance",
    "WindowChoice",
    "builtin_ar",
    "builtin_seasonal_naive",
    "build_stage1_training_set",
    "default_lag_count",
    "default_min_context",
    "external_process_oracle",
    "fit_bayes_ridge",
    "generate_pseudo_forecasts",
    "gp_fit",
    "gp_predict",
    "http_oracle",
    "kernel_eval",
    "lag_matrix",
    "load_config",
    "load_csv",
    "mae",
    "make_instance",
    "make_test_windows",
    "mase",
    "parse_oracle_selector",
    "positional_encoding",
    "rmse",
    "run_ablations",
    "run_adapter",
    "run_benchmark",
    "select_windows",
    "smape",
    "synthesize",
    "tune_filter_threshold",
    "tune_gp",
    "uncertainty_filter",
    "validate_instance",
    "write_synthetic_csv",
]
