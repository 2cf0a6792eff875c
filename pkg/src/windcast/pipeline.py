"""Model fitting and test-window forecasting shared by the CLI commands.

Every family is wrapped in a forecaster exposing ``predict_targets(values,
first_target, future=0)``: forecasts for indices ``first_target`` through
``len(values) - 1 + future``, each issued ``horizon_steps`` earlier using only
data up to its origin.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from . import arma as arma_mod
from .errors import ConfigError, InsufficientHistory, WindcastError
from .evaluation import MetricReport, evaluate, persistence_baseline
from .neuralnet import (
    MlpForecaster,
    NetworkConfig,
    TrainParams,
    fit_mlp_forecaster,
    reference_recipe,
)
from .polyfit import PolynomialModel, eval_polynomial, fit_polynomial, select_degree
from .series import TimeSeries, make_supervised, split_train_test

FAMILIES = ("polynomial", "arma", "arima", "mlp")
PERSISTENCE = "persistence"

DEFAULTS = {
    "data_path": None,
    "output_dir": "out",
    "model": "mlp",
    "models": list(FAMILIES),
    "horizon_hours": [3, 6, 12],
    "num_lags": 2,
    "train_fraction": 0.7,
    "scale_lo": 0.1,
    "scale_hi": 0.9,
    "seed": 0,
    "polynomial": {"degrees": [1, 2, 3, 4, 5], "validation_fraction": 0.2},
    "arma": {"p": 1, "q": 1},
    "arima": {"p": 1, "d": 1, "q": 1},
    "mlp": {
        "hidden_layer_sizes": None,
        "activations": None,
        "trainer": None,
        "trials": 5,
        "max_epochs": 1000,
        "goal_mse": 1e-12,
        "validation_fraction": 0.15,
        "patience": 6,
        "learning_rate": 0.01,
        "mu0": 1e-3,
        "mu_inc": 10.0,
        "mu_dec": 0.1,
        "mu_max": 1e10,
    },
}


def merge_config(*layers) -> dict:
    """Merge config dictionaries; later layers win, nested dicts merge per key."""
    out = copy.deepcopy(DEFAULTS)
    for layer in layers:
        for key, val in (layer or {}).items():
            if val is None:
                continue
            if key not in out:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(out[key], dict):
                if not isinstance(val, dict):
                    raise ConfigError(f"config key {key!r} must be an object")
                unknown = set(val) - set(out[key])
                if unknown:
                    raise ConfigError(f"unknown {key} settings: {sorted(unknown)}")
                out[key].update(val)
            else:
                out[key] = val
    tf = out["train_fraction"]
    if not isinstance(tf, (int, float)) or not 0 < tf < 1:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    if not out["scale_lo"] < out["scale_hi"]:
        raise ConfigError("scale_lo must be below scale_hi")
    if int(out["num_lags"]) < 1:
        raise ConfigError("num_lags must be at least 1")
    return out


def horizon_steps_for(hours, step_seconds: int) -> int:
    """Convert a horizon in hours to a whole number of sampling steps."""
    try:
        seconds = float(hours) * 3600.0
    except (TypeError, ValueError):
        raise ConfigError(f"horizon {hours!r} is not a number") from None
    steps = seconds / step_seconds
    if seconds <= 0 or not math.isclose(steps, round(steps), abs_tol=1e-9):
        raise ConfigError(
            f"horizon {hours} h is not a positive multiple of the {step_seconds / 3600:g} h step")
    return int(round(steps))


def horizon_label(hours) -> str:
    return f"{float(hours):g}h"


@dataclass
class PolynomialForecaster:
    model: PolynomialModel
    horizon_steps: int
    candidate_mse: dict = field(default_factory=dict)

    def predict_targets(self, values, first_target, future=0):
        v = np.asarray(values, dtype=np.float64)
        h = self.horizon_steps
        _check_future(future, h)
        if first_target < h:
            raise InsufficientHistory(f"first target must be at least {h}")
        return eval_polynomial(self.model, v[first_target - h:v.size - h + future])


@dataclass
class ArmaForecaster:
    model: arma_mod.ArmaModel
    horizon_steps: int

    def predict_targets(self, values, first_target, future=0):
        h = self.horizon_steps
        _check_future(future, h)
        first_origin = first_target - h
        if first_origin < max(self.model.p, self.model.q, 0):
            raise InsufficientHistory("not enough history before the first target")
        paths = arma_mod.rolling_forecast_arma(self.model, values, first_origin, h)
        return paths[:paths.shape[0] - h + future, h - 1]


@dataclass
class ArimaForecaster:
    model: arma_mod.ArimaModel
    horizon_steps: int

    def predict_targets(self, values, first_target, future=0):
        h = self.horizon_steps
        _check_future(future, h)
        first_origin = first_target - h
        inner = self.model.inner
        if first_origin < self.model.d + max(inner.p, inner.q):
            raise InsufficientHistory("not enough history before the first target")
        paths = arma_mod.rolling_forecast_arima(self.model, values, first_origin, h)
        return paths[:paths.shape[0] - h + future, h - 1]


@dataclass
class MlpPipelineForecaster:
    forecaster: MlpForecaster
    report: object = None

    @property
    def horizon_steps(self):
        return self.forecaster.horizon_steps

    def predict_targets(self, values, first_target, future=0):
        v = np.asarray(values, dtype=np.float64)
        f = self.forecaster
        h, lags = f.horizon_steps, f.num_lags
        _check_future(future, h)
        first_end = first_target - h
        if first_end < lags - 1:
            raise InsufficientHistory("not enough history before the first target")
        windows = np.lib.stride_tricks.sliding_window_view(v, lags)
        ends = np.arange(first_end, v.size - h + future)
        return f.predict_windows(windows[ends - lags + 1])


def _check_future(future, h):
    if not 0 <= future <= h:
        raise ValueError(f"future must lie in [0, {h}]")


def min_first_target(forecaster) -> int:
    """Earliest target index the forecaster can produce."""
    h = forecaster.horizon_steps
    if isinstance(forecaster, PolynomialForecaster):
        return h
    if isinstance(forecaster, ArmaForecaster):
        return h + max(forecaster.model.p, forecaster.model.q)
    if isinstance(forecaster, ArimaForecaster):
        inner = forecaster.model.inner
        return h + forecaster.model.d + max(inner.p, inner.q)
    return h + forecaster.forecaster.num_lags - 1


def fit_family(family: str, train_values, horizon_steps: int, horizon_hours, cfg: dict):
    """Fit one model family on the training record.

    Returns
    -------
    (forecaster, diagnostics dict)
    """
    vals = np.asarray(train_values, dtype=np.float64)
    if family == "polynomial":
        pc = cfg["polynomial"]
        pairs = make_supervised(vals, 1, horizon_steps)
        n_val = int(math.floor(len(pairs) * float(pc["validation_fraction"])))
        if n_val >= 1 and len(pairs) - n_val >= 2:
            tr, va = pairs.subset(slice(0, len(pairs) - n_val)), pairs.subset(slice(len(pairs) - n_val, None))
            chosen = select_degree(tr, pc["degrees"], va)
            degree = chosen.degree
        else:
            degree = min(pc["degrees"])
        model = fit_polynomial(pairs, degree)
        diag = {"degree": degree, "coefficients": list(model.coefficients),
                "train_mse": model.train_mse, "train_r": model.train_r}
        return PolynomialForecaster(model, horizon_steps), diag
    if family == "arma":
        ac = cfg["arma"]
        model = arma_mod.estimate_arma(vals, int(ac["p"]), int(ac["q"]))
        return ArmaForecaster(model, horizon_steps), arma_diagnostics(model, vals)
    if family == "arima":
        ac = cfg["arima"]
        model = arma_mod.fit_arima(vals, int(ac["p"]), int(ac["d"]), int(ac["q"]))
        diag = arma_diagnostics(model.inner, np.diff(vals, n=model.d))
        diag["d"] = model.d
        return ArimaForecaster(model, horizon_steps), diag
    if family == "mlp":
        mc = cfg["mlp"]
        lags = int(cfg["num_lags"])
        recipe, recipe_trainer = reference_recipe(int(round(float(horizon_hours))), lags, int(cfg["seed"]))
        hidden = mc["hidden_layer_sizes"] or recipe.hidden_layer_sizes
        acts = mc["activations"] or (recipe.activations if not mc["hidden_layer_sizes"] else ())
        config = NetworkConfig(lags, tuple(hidden), 1, tuple(acts), int(cfg["seed"]))
        trainer = mc["trainer"] or recipe_trainer
        params = TrainParams(
            max_epochs=int(mc["max_epochs"]), goal_mse=float(mc["goal_mse"]),
            mu0=float(mc["mu0"]), mu_inc=float(mc["mu_inc"]), mu_dec=float(mc["mu_dec"]),
            mu_max=float(mc["mu_max"]), learning_rate=float(mc["learning_rate"]),
            validation_fraction=float(mc["validation_fraction"]), patience=int(mc["patience"]),
            seed=int(cfg["seed"]))
        f, report = fit_mlp_forecaster(vals, config, params, horizon_steps, lags, trainer,
                                       int(mc["trials"]),
                                       (float(cfg["scale_lo"]), float(cfg["scale_hi"])))
        diag = {"topology": list(config.layer_sizes), "activations": list(config.activations),
                "trainer": trainer, "seed": f.config.seed, "train_report": report.to_dict()}
        return MlpPipelineForecaster(f, report), diag
    raise ConfigError(f"unknown model family {family!r}")


def arma_diagnostics(model: arma_mod.ArmaModel, values) -> dict:
    rep = arma_mod.check_stationarity(model, "unit-root")
    out = {
        "p": model.p, "q": model.q,
        "ar_coeffs": list(model.ar_coeffs), "ma_coeffs": list(model.ma_coeffs),
        "psi_operator": arma_mod.format_operator(model.ar_coeffs),
        "phi_operator": arma_mod.format_operator(model.ma_coeffs),
        "mean": model.mean, "noise_variance": model.noise_variance,
        "iterations": model.iterations, "warning": model.warning,
        "stationarity": {
            "unit_root": rep.unit_root_ok,
            "magnitude": rep.magnitude_ok,
            "methods_disagree": rep.methods_disagree,
            "ar_root_moduli": list(rep.ar_root_moduli),
            "ma_root_moduli": list(rep.ma_root_moduli),
        },
    }
    n = int(model.nobs)
    if n > model.p + model.q + 1 and model.sse > 0:
        out["aic"] = arma_mod.information_criterion(model, model.sse, n, "aic")
        out["mdl"] = arma_mod.information_criterion(model, model.sse, n, "mdl")
    return out


@dataclass
class HorizonResult:
    horizon_hours: float
    horizon_steps: int
    first_target: int
    predictions: dict
    metrics: dict
    diagnostics: dict
    failures: dict


def run_horizon(series: TimeSeries, cfg: dict, hours) -> HorizonResult:
    """Fit every configured family for one horizon and score it on the test split.

    Families that fail are recorded in ``failures`` and skipped.  The
    persistence baseline is always included.
    """
    h = horizon_steps_for(hours, series.step_seconds)
    train, _ = split_train_test(series, float(cfg["train_fraction"]))
    vals = series.values
    first = len(train)
    observed = vals[first:]
    preds, metrics, diags, failures = {}, {}, {}, {}
    for family in cfg["models"]:
        if family not in FAMILIES:
            raise ConfigError(f"unknown model family {family!r}")
        try:
            forecaster, diag = fit_family(family, train.values, h, hours, cfg)
            pred = forecaster.predict_targets(vals, first)
            metrics[family] = evaluate(observed, pred)
        except WindcastError as exc:
            failures[family] = {"error": exc.code, "message": str(exc)}
            continue
        preds[family] = pred
        diags[family] = diag
    obs_p, pred_p = persistence_baseline(vals, h)
    pred_p = pred_p[first - h:]
    preds[PERSISTENCE] = pred_p
    metrics[PERSISTENCE] = evaluate(obs_p[first - h:], pred_p)
    return HorizonResult(float(hours), h, first, preds, metrics, diags, failures)


def metric_dict(rep: MetricReport) -> dict:
    return rep.to_dict()
