import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from windcast.arma import (
    ArimaModel,
    ArmaModel,
    check_stationarity,
    conditional_residuals,
    estimate_arma,
    fit_arima,
    forecast_arima,
    forecast_arma,
    forecast_from_state,
    format_operator,
    information_criterion,
    rolling_forecast_arima,
    rolling_forecast_arma,
    select_order,
    simulate_arma,
)
from windcast.errors import InsufficientHistory, NonStationary, SeriesTooShort

PSI_11, PHI_11 = 0.9876, 0.2108
PSI_22 = (1.552, -0.5526)
PHI_22 = (0.788, 0.06111)


def lag1_autocorr(x):
    x = np.asarray(x) - np.mean(x)
    return float(x[1:] @ x[:-1] / (x @ x))


# --- estimation ------------------------------------------------------------

def test_recovers_reference_arma11():
    truth = ArmaModel.from_coeffs([PSI_11], [PHI_11], mean=8.0, noise_variance=1.0)
    series = simulate_arma(truth, 20000, seed=11)
    start = time.perf_counter()
    model = estimate_arma(series, 1, 1)
    assert time.perf_counter() - start < 10
    assert abs(model.ar_coeffs[0] - PSI_11) <= 0.05
    assert abs(model.ma_coeffs[0] - PHI_11) <= 0.05
    assert model.noise_variance == pytest.approx(1.0, abs=0.05)
    assert model.warning is None


def test_recovers_ar2():
    truth = ArmaModel.from_coeffs([0.5, 0.3], [], noise_variance=1.0)
    assert min(check_stationarity(truth).ar_root_moduli) > 1.1
    model = estimate_arma(simulate_arma(truth, 20000, seed=5), 2, 0)
    np.testing.assert_allclose(model.ar_coeffs, [0.5, 0.3], atol=0.05)


def test_recovers_ar1_half():
    truth = ArmaModel.from_coeffs([0.5], [], noise_variance=1.0)
    model = estimate_arma(simulate_arma(truth, 10000, seed=3), 1, 0)
    assert abs(model.ar_coeffs[0] - 0.5) <= 0.03


def test_white_noise_orders_zero(rng):
    x = 4.0 + rng.normal(0, 2.0, 500)
    model = estimate_arma(x, 0, 0)
    assert (model.p, model.q) == (0, 0)
    assert model.mean == pytest.approx(x.mean())
    assert model.noise_variance == pytest.approx(x.var())


def test_too_short_for_orders():
    with pytest.raises(SeriesTooShort):
        estimate_arma(np.arange(25.0), 1, 1)


def test_residuals_reconstruct_series():
    model = ArmaModel.from_coeffs([0.6], [0.3], mean=2.0)
    x = simulate_arma(model, 200, seed=1).values
    e = conditional_residuals(model, x)
    assert e[0] == 0.0
    xa = x - 2.0
    np.testing.assert_allclose(xa[1:], 0.6 * xa[:-1] + e[1:] - 0.3 * e[:-1], atol=1e-12)


# --- forecasting -----------------------------------------------------------

def test_hand_recursion_fixture():
    out = forecast_from_state([PSI_11], [PHI_11], [1.0], [0.5], 2)
    assert abs(out[0] - 0.8822) <= 1e-4
    assert abs(out[1] - 0.8713) <= 1e-4
    assert out[1] == pytest.approx(PSI_11 * out[0], abs=1e-15)


def test_white_noise_forecasts_mean():
    model = ArmaModel.from_coeffs(mean=6.5)
    np.testing.assert_array_equal(forecast_arma(model, [1.0, 9.0, 3.0], 4), 6.5)


def test_forecast_needs_history():
    model = ArmaModel.from_coeffs([0.5, 0.2], [])
    with pytest.raises(InsufficientHistory):
        forecast_arma(model, [1.0], 1)


def test_rolling_matches_forecast_from_each_origin():
    model = ArmaModel.from_coeffs([0.7], [0.4], mean=3.0)
    x = simulate_arma(model, 60, seed=9).values
    paths = rolling_forecast_arma(model, x, 40, 3)
    assert paths.shape == (20, 3)
    for i, origin in enumerate(range(40, 60)):
        np.testing.assert_allclose(paths[i], forecast_arma(model, x[:origin + 1], 3), atol=1e-12)


@given(st.floats(0.01, 0.99), st.floats(-5, 5), st.floats(-3, 3))
def test_ar1_forecast_decays_to_mean(psi, last, mean):
    model = ArmaModel.from_coeffs([psi], [], mean=mean)
    gaps = np.abs(forecast_arma(model, [mean + last], 30) - mean)
    assert np.all(np.diff(gaps) <= 0)


# --- simulation ------------------------------------------------------------

def test_simulate_constant():
    series = simulate_arma(ArmaModel.from_coeffs([0.0], [0.0], mean=8.0, noise_variance=0.0), 50, 0)
    np.testing.assert_array_equal(series.values, 8.0)


def test_simulate_is_deterministic():
    model = ArmaModel.from_coeffs([0.5], [0.1])
    a = simulate_arma(model, 300, seed=42).values
    b = simulate_arma(model, 300, seed=42).values
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, simulate_arma(model, 300, seed=43).values)


def test_simulated_ar1_autocorrelation():
    series = simulate_arma(ArmaModel.from_coeffs([0.9], []), 50000, seed=2)
    assert lag1_autocorr(series.values) == pytest.approx(0.9, abs=0.02)


def test_simulate_rejects_explosive():
    with pytest.raises(NonStationary):
        simulate_arma(ArmaModel.from_coeffs([1.05], []), 10, 0)


# --- stationarity ----------------------------------------------------------

def test_reference_arma11_stationary_both_ways():
    model = ArmaModel.from_coeffs([PSI_11], [PHI_11])
    assert check_stationarity(model, "magnitude")
    assert check_stationarity(model, "unit-root")


def test_explosive_fails_both_ways():
    model = ArmaModel.from_coeffs([1.05], [])
    assert not check_stationarity(model, "magnitude")
    assert not check_stationarity(model, "unit-root")


def test_reference_arma22_methods_disagree():
    model = ArmaModel.from_coeffs(PSI_22, PHI_22)
    assert not check_stationarity(model, "magnitude")
    rep = check_stationarity(model, "unit-root")
    assert rep and rep.methods_disagree
    # quadratic formula on 1 - a z - b z^2
    a, b = PSI_22
    disc = math.sqrt(a * a + 4 * b)
    expected = sorted(abs((-a + s * disc) / (2 * b)) for s in (1, -1))
    np.testing.assert_allclose(rep.ar_root_moduli, expected, rtol=1e-12)
    assert rep.ar_root_moduli == pytest.approx((1.0014, 1.807), abs=1e-3)


def test_unknown_method():
    with pytest.raises(ValueError):
        check_stationarity(ArmaModel.from_coeffs(), "eyeball")


def test_format_operator():
    assert format_operator([PSI_11]) == "1 - 0.9876 L"
    assert format_operator(PSI_22) == "1 - 1.552 L + 0.5526 L^2"
    assert format_operator([]) == "1"


# --- information criteria and order selection ------------------------------

def test_criterion_hand_values():
    assert information_criterion((1, 1), 100.0, 100, "aic") == pytest.approx(6.0, abs=1e-12)
    assert information_criterion((1, 1), 100.0, 100, "mdl") == pytest.approx(3 * math.log(100))
    assert information_criterion((1, 1), 100.0, 100, "mdl") == pytest.approx(13.8155, abs=1e-4)


@pytest.mark.parametrize("kind", ["aic", "mdl"])
def test_penalty_monotone(kind):
    assert information_criterion((1, 1), 50.0, 100, kind) < information_criterion((2, 2), 50.0, 100, kind)


def test_zero_sse_sentinel():
    with pytest.warns(RuntimeWarning):
        assert information_criterion((0, 0), 0.0, 10) == -math.inf


@pytest.mark.parametrize("seed", [17, 0, 1])
def test_select_order_ar1(seed):
    series = simulate_arma(ArmaModel.from_coeffs([0.8], []), 5000, seed=seed)
    model, grid = select_order(series, 3, 3)
    assert model.p == 1 and model.q in (0, 1)
    assert abs(model.ar_coeffs[0] - 0.8) <= 0.05
    assert len(grid) == 16


def test_select_order_white_noise(rng):
    x = rng.standard_normal(2000)
    model, _ = select_order(x, 2, 2)
    assert (model.p, model.q) == (0, 0)
    model, grid = select_order(x, 0, 0, "aic")
    assert (model.p, model.q) == (0, 0) and len(grid) == 1


def test_select_order_prefers_fewer_terms_on_ties():
    # whatever wins must not share its score with a smaller p + q
    x = np.tile([1.0, -1.0], 100)
    model, grid = select_order(x, 1, 1, "aic")
    best = min(s.aic for s in grid)
    tied = [s for s in grid if s.aic == best]
    assert (model.p + model.q, model.p) == min((s.p + s.q, s.p) for s in tied)


def test_refined_estimates_stay_invertible(rng):
    x = rng.standard_normal(2000)
    model = estimate_arma(x, 2, 2)
    rep = check_stationarity(model)
    assert rep.unit_root_ok
    assert min(rep.ma_root_moduli) > 1.0


# --- ARIMA -----------------------------------------------------------------

def test_arima_random_walk_with_drift():
    model = fit_arima([1.0, 2.0, 3.0, 4.0], 0, 1, 0)
    assert model.inner.mean == 1.0
    assert forecast_arima(model, [1.0, 2.0, 3.0, 4.0], 1)[0] == pytest.approx(5.0, abs=1e-12)


def test_arima_second_difference():
    history = [1.0, 4.0, 9.0, 16.0]
    model = fit_arima(history, 0, 2, 0)
    assert forecast_arima(model, history, 1)[0] == pytest.approx(25.0, abs=1e-12)


def test_arima_d0_is_arma(rng):
    x = simulate_arma(ArmaModel.from_coeffs([0.6], [0.2], mean=5.0), 800, seed=4).values
    arima = fit_arima(x, 1, 0, 1)
    arma = estimate_arma(x, 1, 1)
    assert arima.inner == arma
    np.testing.assert_array_equal(forecast_arima(arima, x, 3), forecast_arma(arma, x, 3))


@given(st.lists(st.integers(0, 300), min_size=2, max_size=30))
def test_zero_model_d1_repeats_last_value(vals):
    x = np.array(vals, dtype=float) / 10
    model = ArimaModel(ArmaModel.from_coeffs(mean=0.0), 1, (x[0],))
    assert np.all(forecast_arima(model, x, 5) == x[-1])


def test_rolling_arima_matches_direct():
    x = np.cumsum(simulate_arma(ArmaModel.from_coeffs([0.5], []), 200, seed=8).values) / 10
    model = fit_arima(x[:150], 1, 1, 0)
    paths = rolling_forecast_arima(model, x, 150, 2)
    for i, origin in enumerate(range(150, 200)):
        np.testing.assert_allclose(paths[i], forecast_arima(model, x[:origin + 1], 2), atol=1e-10)
