import json

import numpy as np
import pytest

from windcast.cli import main, read_predictions
from windcast.evaluation import evaluate
from windcast.modelio import model_to_dict, write_json
from windcast.pipeline import PolynomialForecaster
from windcast.polyfit import PolynomialModel
from windcast.series import TimeSeries, load_series, parse_timestamp, write_series
from windcast.synthetic import generate, preset

FAST = {"mlp": {"trials": 1, "max_epochs": 40}}


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err.strip().splitlines()[-1])["error"]


@pytest.fixture
def data_csv(tmp_path):
    series, _ = generate(preset("windlike", n=700, seed=5))
    path = tmp_path / "wind.csv"
    write_series(path, series)
    return path


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(FAST))
    return path


# --- simulate --------------------------------------------------------------

def test_simulate_repeatable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["simulate", "--n", 300, "--seed", 4, "-o", a], capsys)[0] == 0
    assert run(["simulate", "--n", 300, "--seed", 4, "-o", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(load_series(a)) == 300


def test_simulate_constant_column(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, stdout, _ = run(["simulate", "--preset", "constant", "-o", out], capsys)
    assert code == 0
    assert json.loads(stdout)["clipped"] == 0
    np.testing.assert_array_equal(load_series(out).values, 8.0)


def test_simulate_benchmark_rows(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, stdout, _ = run(["simulate", "-o", out], capsys)
    assert code == 0 and json.loads(stdout)["rows"] == 11000
    assert len(out.read_text().splitlines()) == 11001


def test_simulate_nonstationary_spec(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 100, "ar": [1.01]}))
    code, _, err = run(["simulate", "--spec", spec, "-o", tmp_path / "x.csv"], capsys)
    assert code == 1 and error_of(err) == "non_stationary"


# --- fit -------------------------------------------------------------------

def test_fit_six_hours_is_two_steps(data_csv, tmp_path, capsys):
    out = tmp_path / "fit"
    code, _, _ = run(["fit", "--data", data_csv, "--model", "arma", "--horizon-hours", 6,
                      "--output-dir", out], capsys)
    assert code == 0
    model = json.loads((out / "model.json").read_text())
    assert model["horizon_steps"] == 2 and model["schema_version"] == 1
    report = json.loads((out / "fit_report.json").read_text())
    assert report["horizon_steps"] == 2 and report["n_train"] == 490


def test_fit_seven_hours_rejected(data_csv, tmp_path, capsys):
    code, _, err = run(["fit", "--data", data_csv, "--model", "arma", "--horizon-hours", 7,
                        "--output-dir", tmp_path], capsys)
    assert code == 1 and error_of(err) == "config_error"


def test_fit_twelve_hour_mlp_recipe(data_csv, fast_config, tmp_path, capsys):
    out = tmp_path / "mlp"
    code, _, _ = run(["fit", "--config", fast_config, "--data", data_csv, "--model", "mlp",
                      "--horizon-hours", 12, "--output-dir", out], capsys)
    assert code == 0
    body = json.loads((out / "model.json").read_text())["model"]
    assert body["hidden_layer_sizes"] == [3, 1]
    assert body["activations"] == ["logsig"] * 3 and body["trainer"] == "scg"


def test_fit_needs_data(tmp_path, capsys):
    code, _, err = run(["fit", "--model", "arma", "--horizon-hours", 3], capsys)
    assert code == 1 and error_of(err) == "config_error"


# --- forecast --------------------------------------------------------------

def polynomial_file(path, train_fraction=0.5):
    f = PolynomialForecaster(PolynomialModel(2, (0.7173, 0.8930, 0.0045), 1), 1)
    write_json(path, model_to_dict(f, horizon_hours=3, step_seconds=10800,
                                   train_fraction=train_fraction))


def short_csv(path, values):
    write_series(path, TimeSeries(parse_timestamp("2001-08-01T03:15:00Z"), 10800, values))


def test_forecast_reference_quadratic(tmp_path, capsys):
    polynomial_file(tmp_path / "model.json")
    short_csv(tmp_path / "d.csv", [9.0, 10.0, 11.0, 12.0])
    out = tmp_path / "pred.csv"
    code, _, _ = run(["forecast", "--model-file", tmp_path / "model.json", "--data",
                      tmp_path / "d.csv", "-o", out], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "timestamp,observed,predicted"
    ts, observed, predicted = lines[1].split(",")
    assert ts == "2001-08-01T09:15:00Z" and float(observed) == 11.0
    assert abs(float(predicted) - 10.0973) <= 1e-10
    # one future row past the data, with no observation
    assert lines[-1].split(",")[1] == ""
    assert len(lines) == 1 + 3


def test_forecast_zero_steps_is_header_only(tmp_path, capsys):
    polynomial_file(tmp_path / "model.json")
    short_csv(tmp_path / "d.csv", [9.0, 10.0, 11.0, 12.0])
    out = tmp_path / "pred.csv"
    code, _, _ = run(["forecast", "--model-file", tmp_path / "model.json", "--data",
                      tmp_path / "d.csv", "--steps", 0, "-o", out], capsys)
    assert code == 0
    assert out.read_text() == "timestamp,observed,predicted\n"


def test_forecast_all_starts_early(tmp_path, capsys):
    polynomial_file(tmp_path / "model.json")
    short_csv(tmp_path / "d.csv", [9.0, 10.0, 11.0, 12.0])
    out = tmp_path / "pred.csv"
    run(["forecast", "--model-file", tmp_path / "model.json", "--data", tmp_path / "d.csv",
         "--all", "-o", out], capsys)
    assert len(out.read_text().splitlines()) == 1 + 4


def test_forecast_tampered_model(tmp_path, capsys):
    polynomial_file(tmp_path / "model.json")
    data = json.loads((tmp_path / "model.json").read_text())
    del data["model"]["coefficients"]
    (tmp_path / "model.json").write_text(json.dumps(data))
    short_csv(tmp_path / "d.csv", [9.0, 10.0, 11.0, 12.0])
    code, _, err = run(["forecast", "--model-file", tmp_path / "model.json", "--data",
                        tmp_path / "d.csv", "-o", tmp_path / "p.csv"], capsys)
    assert code == 1 and error_of(err) == "schema_error"


def test_forecast_rejects_unknown_schema_version(tmp_path, capsys):
    polynomial_file(tmp_path / "model.json")
    data = json.loads((tmp_path / "model.json").read_text())
    data["schema_version"] = 99
    (tmp_path / "model.json").write_text(json.dumps(data))
    short_csv(tmp_path / "d.csv", [9.0, 10.0, 11.0, 12.0])
    code, _, err = run(["forecast", "--model-file", tmp_path / "model.json", "--data",
                        tmp_path / "d.csv", "-o", tmp_path / "p.csv"], capsys)
    assert code == 1 and error_of(err) == "schema_error"


def test_fit_then_forecast_then_evaluate(data_csv, tmp_path, capsys):
    out = tmp_path / "fit"
    run(["fit", "--data", data_csv, "--model", "arima", "--horizon-hours", 3,
         "--output-dir", out], capsys)
    pred = tmp_path / "pred.csv"
    assert run(["forecast", "--model-file", out / "model.json", "--data", data_csv,
                "-o", pred], capsys)[0] == 0
    obs, p = read_predictions(pred)
    assert obs.size == 700 - 490
    code, stdout, _ = run(["evaluate", "--predictions", pred], capsys)
    assert code == 0
    assert json.loads(stdout) == evaluate(obs, p).to_dict()


# --- compare ---------------------------------------------------------------

def test_compare_outputs_and_consistency(data_csv, fast_config, tmp_path, capsys):
    out = tmp_path / "cmp"
    code, stdout, _ = run(["compare", "--config", fast_config, "--data", data_csv,
                           "--horizon-hours", 3, 6, "--output-dir", out], capsys)
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics["horizons"]) == {"3h", "6h"}
    assert metrics["data"]["n_test"] == 210
    assert "persistence" in (out / "ranking.txt").read_text()
    for label, block in metrics["horizons"].items():
        assert "persistence" in block["metrics"]
        assert block["ranking"][0] in block["metrics"]
        for family, stored in block["metrics"].items():
            obs, pred = read_predictions(out / f"plot_{family}_{label}.csv")
            assert evaluate(obs, pred).to_dict() == stored
    assert set(json.loads((out / "fit_report.json").read_text())["6h"]) == {
        "polynomial", "arma", "arima", "mlp"}


def test_compare_with_failing_family(data_csv, tmp_path, capsys, caplog):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"models": ["arma", "polynomial"], "arma": {"p": 40, "q": 40}}))
    out = tmp_path / "cmp"
    code, _, err = run(["compare", "--config", cfg, "--data", data_csv, "--horizon-hours", 3,
                        "--output-dir", out], capsys)
    assert code == 0
    assert any("arma" in r.getMessage() for r in caplog.records if r.levelname == "WARNING")
    block = json.loads((out / "metrics.json").read_text())["horizons"]["3h"]
    assert block["ranking"] == sorted(block["ranking"], key=lambda k: block["metrics"][k]["mse"])
    assert "arma" in block["failures"] and "arma" not in block["metrics"]


def test_compare_all_failing_exits_nonzero(data_csv, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"models": ["arma"], "arma": {"p": 40, "q": 40}}))
    code, _, err = run(["compare", "--config", cfg, "--data", data_csv, "--horizon-hours", 3,
                        "--output-dir", tmp_path / "cmp"], capsys)
    assert code == 1


def test_bad_config_file(data_csv, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    code, _, err = run(["compare", "--config", cfg, "--data", data_csv], capsys)
    assert code == 1 and error_of(err) == "config_error"


def test_missing_data_file(tmp_path, capsys):
    code, _, err = run(["compare", "--data", tmp_path / "nope.csv"], capsys)
    assert code == 1
