"""The shared ``model.json`` format for every model family."""
from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from . import arma as arma_mod
from .errors import NetworkError, SchemaError
from .neuralnet import MlpForecaster, NetworkConfig, init_network
from .pipeline import (
    ArimaForecaster,
    ArmaForecaster,
    MlpPipelineForecaster,
    PolynomialForecaster,
)
from .polyfit import PolynomialModel
from .series import ScalingParams

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_NUM_LIST = {"type": "array", "items": _NUM}
_INT = {"type": "integer", "minimum": 0}

_ARMA_BODY = {
    "type": "object",
    "required": ["p", "q", "ar_coeffs", "ma_coeffs", "mean", "noise_variance",
                 "psi_operator", "phi_operator"],
    "properties": {
        "p": _INT, "q": _INT, "ar_coeffs": _NUM_LIST, "ma_coeffs": _NUM_LIST,
        "mean": _NUM, "noise_variance": {"type": "number", "minimum": 0},
        "psi_operator": {"type": "string"}, "phi_operator": {"type": "string"},
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "family", "horizon_steps", "horizon_hours", "step_seconds",
                 "train_fraction", "model"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "family": {"enum": ["polynomial", "arma", "arima", "mlp"]},
        "horizon_steps": {"type": "integer", "minimum": 1},
        "horizon_hours": _NUM,
        "step_seconds": {"type": "integer", "minimum": 1},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "model": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"family": {"const": "polynomial"}}},
         "then": {"properties": {"model": {
             "type": "object", "required": ["degree", "coefficients"],
             "properties": {"degree": _INT, "coefficients": _NUM_LIST}}}}},
        {"if": {"properties": {"family": {"const": "arma"}}},
         "then": {"properties": {"model": _ARMA_BODY}}},
        {"if": {"properties": {"family": {"const": "arima"}}},
         "then": {"properties": {"model": {
             "allOf": [_ARMA_BODY, {"required": ["d", "seed_values"],
                                    "properties": {"d": _INT, "seed_values": _NUM_LIST}}]}}}},
        {"if": {"properties": {"family": {"const": "mlp"}}},
         "then": {"properties": {"model": {
             "type": "object",
             "required": ["num_lags", "input_size", "hidden_layer_sizes", "output_size",
                          "activations", "parameters", "scaling", "seed", "trainer"],
             "properties": {
                 "num_lags": {"type": "integer", "minimum": 1},
                 "input_size": {"type": "integer", "minimum": 1},
                 "hidden_layer_sizes": {"type": "array",
                                        "items": {"type": "integer", "minimum": 1}},
                 "output_size": {"const": 1},
                 "activations": {"type": "array",
                                 "items": {"enum": ["logsig", "tansig", "purelin"]}},
                 "parameters": _NUM_LIST,
                 "seed": {"type": "integer"},
                 "trainer": {"type": "string"},
                 "scaling": {"type": "object",
                             "required": ["source_min", "source_max", "target_lo", "target_hi"],
                             "properties": {k: _NUM for k in
                                            ("source_min", "source_max", "target_lo",
                                             "target_hi")}},
             }}}}},
    ],
}


def _arma_body(model: arma_mod.ArmaModel) -> dict:
    return {
        "p": model.p,
        "q": model.q,
        "ar_coeffs": list(model.ar_coeffs),
        "ma_coeffs": list(model.ma_coeffs),
        "mean": model.mean,
        "noise_variance": model.noise_variance,
        "psi_operator": arma_mod.format_operator(model.ar_coeffs),
        "phi_operator": arma_mod.format_operator(model.ma_coeffs),
    }


def _arma_from(body: dict) -> arma_mod.ArmaModel:
    return arma_mod.ArmaModel(int(body["p"]), int(body["q"]), tuple(body["ar_coeffs"]),
                              tuple(body["ma_coeffs"]), float(body["mean"]),
                              float(body["noise_variance"]))


def model_to_dict(forecaster, *, horizon_hours, step_seconds: int, train_fraction: float) -> dict:
    """Serialise a fitted forecaster (as built by ``pipeline.fit_family``)."""
    if isinstance(forecaster, PolynomialForecaster):
        m = forecaster.model
        family = "polynomial"
        body = {"degree": m.degree, "coefficients": list(m.coefficients)}
        # training statistics are informational; absent for hand-built models
        if math.isfinite(m.train_mse):
            body.update(train_mse=m.train_mse, train_r=m.train_r)
    elif isinstance(forecaster, ArmaForecaster):
        family, body = "arma", _arma_body(forecaster.model)
    elif isinstance(forecaster, ArimaForecaster):
        family = "arima"
        body = _arma_body(forecaster.model.inner)
        body.update(d=forecaster.model.d, seed_values=list(forecaster.model.seed_values))
    elif isinstance(forecaster, MlpPipelineForecaster):
        f = forecaster.forecaster
        family = "mlp"
        sc = f.scaling
        body = {
            "num_lags": f.num_lags,
            "input_size": f.config.input_size,
            "hidden_layer_sizes": list(f.config.hidden_layer_sizes),
            "output_size": f.config.output_size,
            "activations": list(f.config.activations),
            "parameters": f.network.get_flat().tolist(),
            "scaling": {"source_min": sc.source_min, "source_max": sc.source_max,
                        "target_lo": sc.target_lo, "target_hi": sc.target_hi},
            "seed": f.config.seed,
            "trainer": f.trainer,
        }
    else:
        raise TypeError(f"cannot serialise {type(forecaster).__name__}")
    return {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "horizon_steps": int(forecaster.horizon_steps),
        "horizon_hours": horizon_hours,
        "step_seconds": int(step_seconds),
        "train_fraction": float(train_fraction),
        "model": body,
    }


def validate_model_dict(data) -> None:
    if isinstance(data, dict) and "schema_version" in data and data["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {data['schema_version']!r}")
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"model file invalid at {where}: {exc.message}") from None


def model_from_dict(data: dict):
    """Rebuild the forecaster stored in a validated model dictionary."""
    validate_model_dict(data)
    h = int(data["horizon_steps"])
    body = data["model"]
    family = data["family"]
    try:
        if family == "polynomial":
            return PolynomialForecaster(
                PolynomialModel(int(body["degree"]), tuple(body["coefficients"]), h), h)
        if family == "arma":
            return ArmaForecaster(_arma_from(body), h)
        if family == "arima":
            inner = _arma_from(body)
            return ArimaForecaster(
                arma_mod.ArimaModel(inner, int(body["d"]), tuple(body["seed_values"])), h)
        config = NetworkConfig(int(body["input_size"]), tuple(body["hidden_layer_sizes"]),
                               int(body["output_size"]), tuple(body["activations"]),
                               int(body["seed"]))
        network = init_network(config).with_flat(np.asarray(body["parameters"], dtype=float))
        sc = body["scaling"]
        scaling = ScalingParams(float(sc["source_min"]), float(sc["source_max"]),
                                float(sc["target_lo"]), float(sc["target_hi"]))
        if int(body["num_lags"]) != config.input_size:
            raise SchemaError("num_lags must equal input_size")
        return MlpPipelineForecaster(
            MlpForecaster(config, network, scaling, int(body["num_lags"]), h, body["trainer"]))
    except SchemaError:
        raise
    except (ValueError, TypeError, NetworkError) as exc:
        raise SchemaError(f"model file inconsistent: {exc}") from None


def dumps(data) -> str:
    """Stable, byte-reproducible JSON text."""
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False) + "\n"


def write_json(path, data) -> None:
    Path(path).write_text(dumps(data), encoding="utf-8")


def read_model(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from None
    return data, model_from_dict(data)
