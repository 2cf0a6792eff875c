"""Command line front end: ``windcast fit|forecast|evaluate|compare|simulate``.

Configuration comes from an optional JSON file (``--config``) overridden by
flags.  Errors are reported on stderr as a JSON object and a nonzero exit.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, InsufficientHistory, SchemaError, WindcastError
from .evaluation import compare_report, evaluate, format_ranking
from .modelio import dumps, model_to_dict, read_model, write_json
from .pipeline import (
    FAMILIES,
    PERSISTENCE,
    fit_family,
    horizon_label,
    horizon_steps_for,
    merge_config,
    min_first_target,
    run_horizon,
)
from .series import format_timestamp, load_series, split_train_test, train_size, write_series
from .synthetic import GeneratorSpec, generate, preset

log = logging.getLogger("windcast")

PREDICTION_HEADER = ("timestamp", "observed", "predicted")


def _fmt(value) -> str:
    return "" if value is None or (isinstance(value, float) and math.isnan(value)) else repr(float(value))


def write_predictions(path, times, observed, predicted) -> None:
    """CSV ``timestamp,observed,predicted``; None observations are left blank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        for t, o, p in zip(times, observed, predicted):
            w.writerow((format_timestamp(t), _fmt(o), _fmt(p)))


def read_predictions(path):
    """Return ``(observed, predicted)`` arrays over rows that have both."""
    obs, pred = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PREDICTION_HEADER:
            raise SchemaError(f"expected header {','.join(PREDICTION_HEADER)!r}")
        for row in reader:
            if len(row) != 3:
                raise SchemaError(f"bad predictions row {row!r}")
            if row[1].strip() and row[2].strip():
                obs.append(float(row[1]))
                pred.append(float(row[2]))
    return np.array(obs), np.array(pred)


def _load_config(args) -> dict:
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    flags = {
        "data_path": getattr(args, "data", None),
        "output_dir": getattr(args, "output_dir", None),
        "seed": getattr(args, "seed", None),
    }
    if getattr(args, "model", None):
        flags["model"] = args.model
        flags["models"] = [m.strip() for m in args.model.split(",")]
    if getattr(args, "horizon_hours", None):
        flags["horizon_hours"] = args.horizon_hours
    cfg = merge_config(file_cfg, flags)
    if not cfg["data_path"]:
        raise ConfigError("no data file given (use --data or data_path in the config)")
    return cfg


def _horizons(cfg) -> list:
    hours = cfg["horizon_hours"]
    return list(hours) if isinstance(hours, (list, tuple)) else [hours]


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    family = cfg["model"]
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}")
    horizons = _horizons(cfg)
    if len(horizons) != 1:
        raise ConfigError("fit takes a single horizon; pass --horizon-hours")
    hours = horizons[0]
    series = load_series(cfg["data_path"])
    h = horizon_steps_for(hours, series.step_seconds)
    train, test = split_train_test(series, float(cfg["train_fraction"]))
    forecaster, diag = fit_family(family, train.values, h, hours, cfg)
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "model.json", model_to_dict(
        forecaster, horizon_hours=hours, step_seconds=series.step_seconds,
        train_fraction=float(cfg["train_fraction"])))
    write_json(out / "fit_report.json", {
        "family": family,
        "horizon_hours": hours,
        "horizon_steps": h,
        "n_train": len(train),
        "n_test": len(test),
        "seed": cfg["seed"],
        "diagnostics": diag,
    })
    log.info("wrote %s and %s", out / "model.json", out / "fit_report.json")
    return 0


def cmd_forecast(args) -> int:
    data, forecaster = read_model(args.model_file)
    series = load_series(args.data)
    if series.step_seconds != data["step_seconds"]:
        raise ConfigError(
            f"data step {series.step_seconds}s differs from the model's {data['step_seconds']}s")
    h = forecaster.horizon_steps
    n = len(series)
    earliest = min_first_target(forecaster)
    if args.all:
        first = earliest
    else:
        first = max(earliest, train_size(n, float(data["train_fraction"])))
    if first > n:
        raise InsufficientHistory("data too short for this model")
    pred = forecaster.predict_targets(series.values, first, future=h)
    times = [series.time_at(i) for i in range(first, n + h)]
    observed = [float(series.values[i]) if i < n else None for i in range(first, n + h)]
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("--steps must be non-negative")
        times, observed, pred = times[:args.steps], observed[:args.steps], pred[:args.steps]
    write_predictions(args.output, times, observed, pred)
    return 0


def cmd_evaluate(args) -> int:
    obs, pred = read_predictions(args.predictions)
    if obs.size == 0:
        raise SchemaError("no rows with both observed and predicted values")
    text = dumps(evaluate(obs, pred).to_dict())
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    series = load_series(cfg["data_path"])
    train, test = split_train_test(series, float(cfg["train_fraction"]))
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    horizons = {}
    fit_reports = {}
    ranking_text = []
    any_fitted = False
    for hours in _horizons(cfg):
        res = run_horizon(series, cfg, hours)
        label = horizon_label(hours)
        for family, failure in res.failures.items():
            log.warning("%s at %s failed: %s", family, label, failure["message"])
        any_fitted = any_fitted or any(f != PERSISTENCE for f in res.predictions)
        times = [series.time_at(i) for i in range(res.first_target, len(series))]
        observed = series.values[res.first_target:]
        for family, pred in res.predictions.items():
            write_predictions(out / f"plot_{family}_{label}.csv", times, observed, pred)
        ranked = compare_report(list(res.metrics.items()))
        horizons[label] = {
            "horizon_hours": res.horizon_hours,
            "horizon_steps": res.horizon_steps,
            "metrics": {k: v.to_dict() for k, v in res.metrics.items()},
            "ranking": [name for name, _ in ranked],
            "failures": res.failures,
        }
        fit_reports[label] = res.diagnostics
        ranking_text.append(format_ranking(
            list(res.metrics.items()),
            title=f"{label} ahead ({res.horizon_steps} step(s)), test n={len(observed)}"))
    metrics = {
        "schema_version": 1,
        "data": {
            "path": str(cfg["data_path"]),
            "n": len(series),
            "n_train": len(train),
            "n_test": len(test),
            "start_time": format_timestamp(series.start_time),
            "step_seconds": series.step_seconds,
        },
        "seed": cfg["seed"],
        "train_fraction": cfg["train_fraction"],
        "horizons": horizons,
    }
    write_json(out / "metrics.json", metrics)
    write_json(out / "fit_report.json", fit_reports)
    (out / "ranking.txt").write_text("\n\n".join(ranking_text) + "\n", encoding="utf-8")
    sys.stdout.write("\n\n".join(ranking_text) + "\n")
    if not any_fitted:
        raise WindcastError("every model family failed")
    return 0


def cmd_simulate(args) -> int:
    if args.spec:
        try:
            raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read generator spec: {exc}") from None
        if args.n is not None:
            raw["n"] = args.n
        if args.seed is not None:
            raw["seed"] = args.seed
        spec = GeneratorSpec.from_dict(raw)
    else:
        spec = preset(args.preset, n=args.n, seed=args.seed)
    series, clipped = generate(spec)
    write_series(args.output, series)
    summary = {"rows": len(series), "clipped": clipped, "spec": spec.to_dict()}
    sys.stdout.write(dumps(summary))
    return 0


def _common(p, *, need_model=False):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--data", help="input CSV (timestamp,wind_speed_mps)")
    p.add_argument("--model", help="model family" + (" (comma list allowed)" if not need_model else ""))
    p.add_argument("--horizon-hours", type=float, nargs="+", dest="horizon_hours",
                   help="forecast horizon(s) in hours")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windcast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"windcast {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model family on the training split")
    _common(p, need_model=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast with a saved model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, help="emit at most this many rows")
    p.add_argument("--all", action="store_true",
                   help="start at the earliest predictable row instead of the test split")
    p.add_argument("-o", "--output", default="predictions.csv")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="score a predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="fit and rank every family per horizon")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="write a synthetic series")
    p.add_argument("--preset", default="windlike")
    p.add_argument("--spec", help="JSON generator spec (overrides --preset)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except WindcastError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}, sort_keys=True) + "\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)},
                                    sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
