import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from covadapt import (
    GeometryError,
    NumericalError,
    TaskSpec,
    build_stage1_training_set,
    builtin_seasonal_naive,
    fit_bayes_ridge,
    generate_pseudo_forecasts,
    select_windows,
)
from covadapt.pseudogen import BayesRidgeModel, horizon_lag_matrix


def linear_data(n=50, slope=2.0, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=n)
    return x.reshape(-1, 1), slope * x


# -- evidence-approximation fit ------------------------------------------------


def test_fit_recovers_noiseless_linear_map():
    X, y = linear_data()
    model = fit_bayes_ridge(X, y)
    pred = model.predict(np.array([[0.5]]))
    assert pred[0] == pytest.approx(1.0, abs=1e-3)


def test_fit_matches_closed_form_ridge_at_converged_precisions():
    X, y = linear_data()
    model = fit_bayes_ridge(X, y)
    # the evidence iteration fixes (alpha, lam); at those values the weights
    # must solve the standardized ridge normal equations exactly
    Z = (X - model.input_mean) / model.input_std
    ys = (y - model.target_mean) / model.target_std
    ridge = (model.lam / model.alpha) * np.eye(Z.shape[1]) + Z.T @ Z
    closed_form = np.linalg.solve(ridge, Z.T @ ys)
    assert_allclose(model.weights, closed_form, atol=1e-8)


def test_fit_constant_target_predicts_it_exactly():
    X = np.random.default_rng(1).normal(size=(20, 3))
    model = fit_bayes_ridge(X, np.full(20, 4.5))
    assert_array_equal(model.predict(X), np.full(20, 4.5))
    assert model.target_std == 1.0


def test_fit_constant_columns_dropped():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=30)
    X = np.column_stack([x, np.full(30, 7.0)])
    model = fit_bayes_ridge(X, 2.0 * x)
    assert list(model.kept_columns) == [True, False]
    assert model.predict(np.array([[0.5, 7.0]]))[0] == pytest.approx(1.0, abs=1e-3)


def test_fit_all_columns_constant_degenerates_to_mean():
    X = np.full((10, 2), 3.0)
    y = np.linspace(0.0, 1.0, 10)
    model = fit_bayes_ridge(X, y)
    assert model.predict(X) == pytest.approx(np.full(10, y.mean()))


def test_large_fixed_lambda_shrinks_weights():
    X, y = linear_data()
    model = fit_bayes_ridge(X, y, fixed_lam=1e6)
    assert np.all(np.abs(model.weights) < 1e-2)
    assert model.lam == 1e6


def test_fit_rejects_bad_shapes_and_values():
    with pytest.raises(GeometryError):
        fit_bayes_ridge(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(GeometryError):
        fit_bayes_ridge(np.zeros((4, 2)), np.zeros(3))
    with pytest.raises(NumericalError):
        fit_bayes_ridge(np.full((4, 1), np.nan), np.zeros(4))


def test_fit_positive_precisions_on_noisy_data():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4))
    w = np.array([1.0, -2.0, 0.5, 0.0])
    y = X @ w + rng.normal(scale=0.3, size=200)
    model = fit_bayes_ridge(X, y)
    assert model.alpha > 0 and model.lam > 0
    assert model.n_iter >= 1
    # alpha estimates the standardized noise precision
    noise_var_std = 1.0 / model.alpha * 1.0
    assert 0.3**2 / np.var(y) * 0.5 < noise_var_std < 0.3**2 / np.var(y) * 2.0


# -- stage-one training set ----------------------------------------------------


def small_spec():
    return TaskSpec(history_len=48, horizon_len=4, min_context=24, lag_count=3)


def test_training_set_shape_and_targets():
    spec = small_spec()
    rng = np.random.default_rng(0)
    series = rng.normal(size=48)
    windows = select_windows(series, spec, "latest")
    oracle = builtin_seasonal_naive(4)
    forecasts = [oracle(series[: start - 1], 4) for start in windows.starts]

    X, y = build_stage1_training_set(series, windows, forecasts, spec, seasonality=4)
    assert X.shape == (3 * 4, 1 + 3 + spec.pos_dim)
    assert_array_equal(y, np.concatenate([f.mean for f in forecasts]))


def test_training_set_first_row_features():
    spec = small_spec()
    series = np.arange(1.0, 49.0)
    windows = select_windows(series, spec, "latest")
    forecasts = [np.zeros(4) for _ in windows.starts]
    X, _ = build_stage1_training_set(series, windows, forecasts, spec, seasonality=4)

    start = windows.starts[0]
    # value feature is y_start, lag block is the L values before it
    assert X[0, 0] == series[start - 1]
    assert_array_equal(X[0, 1:4], series[start - 4 : start - 1])


def test_training_set_rejects_wrong_forecast_count():
    spec = small_spec()
    series = np.arange(1.0, 49.0)
    windows = select_windows(series, spec, "latest")
    with pytest.raises(GeometryError):
        build_stage1_training_set(series, windows, [np.zeros(4)], spec, seasonality=4)


# -- pseudo-forecast generation ------------------------------------------------


def identity_model(n_features: int) -> BayesRidgeModel:
    # passes the value feature straight through
    weights = np.zeros(n_features)
    weights[0] = 1.0
    return BayesRidgeModel(
        weights=weights,
        alpha=1.0,
        lam=1.0,
        input_mean=np.zeros(n_features),
        input_std=np.ones(n_features),
        kept_columns=np.ones(n_features, dtype=bool),
        target_mean=0.0,
        target_std=1.0,
        n_iter=0,
    )


def test_identity_generator_passes_values_through():
    spec = small_spec()
    series = np.random.default_rng(4).normal(size=48)
    oracle_mean = np.array([9.0, 8.0, 7.0, 6.0])
    model = identity_model(1 + spec.lag_count + spec.pos_dim)

    pseudo = generate_pseudo_forecasts(model, series, oracle_mean, spec, seasonality=4)
    assert pseudo.valid_from == spec.lag_count + 1
    assert_allclose(pseudo.history, series[spec.lag_count :], atol=1e-12)
    assert_allclose(pseudo.horizon, oracle_mean, atol=1e-12)


def test_horizon_lag_rows_stitch_truth_and_forecast():
    series = np.arange(1.0, 11.0)
    horizon = np.array([101.0, 102.0, 103.0])
    lags = horizon_lag_matrix(series, horizon, 2)
    # t = H+1 uses only true values, later steps mix in the forecast
    assert_array_equal(lags[0], [9.0, 10.0])
    assert_array_equal(lags[1], [10.0, 101.0])
    assert_array_equal(lags[2], [101.0, 102.0])


def test_generate_checks_lengths():
    spec = small_spec()
    series = np.zeros(48)
    model = identity_model(1 + spec.lag_count + spec.pos_dim)
    with pytest.raises(GeometryError):
        generate_pseudo_forecasts(model, series, np.zeros(3), spec, seasonality=4)


def test_generator_imitates_a_seasonal_oracle_out_of_sample():
    # seasonal-naive with s <= L is exactly expressible by the generator's
    # feature map (weight 1 on the lag at offset s), so after fitting on the
    # three labeled windows the pseudo-forecasts should match the oracle
    # everywhere, including the never-labeled horizon
    s = 4
    spec = TaskSpec(history_len=60, horizon_len=s, min_context=24, lag_count=4)
    rng = np.random.default_rng(5)
    series = rng.normal(10.0, 1.0, size=60)

    oracle = builtin_seasonal_naive(s)
    # five windows give 20 rows, enough to pin the lag weight down
    windows = select_windows(series, spec, "zscore", k=5)
    forecasts = [oracle(series[: start - 1], s) for start in windows.starts]
    X, y = build_stage1_training_set(series, windows, forecasts, spec, seasonality=s)
    model = fit_bayes_ridge(X, y)
    assert_allclose(model.predict(X), y, atol=1e-3)

    hor = oracle(series, s)
    pseudo = generate_pseudo_forecasts(model, series, hor.mean, spec, seasonality=s)
    L = spec.lag_count
    expected_history = series[L - s : 60 - s]
    assert_allclose(pseudo.history, expected_history, atol=1e-3)
    assert_allclose(pseudo.horizon, hor.mean, atol=1e-3)
