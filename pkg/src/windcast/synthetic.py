"""Seeded synthetic wind-speed generators.

A generator is a level plus an optional annual sinusoid plus ARMA noise,
clipped at zero::

    x_t = mean + amplitude * sin(2 pi t / period) + ARMA(ar, ma, sigma)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arma import ArmaModel, check_stationarity, simulate_arma
from .errors import ConfigError, NonStationary
from .series import THREE_HOURS, TimeSeries, parse_timestamp

# one year of 3-hourly samples
ANNUAL_PERIOD = 2920


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    mean: float = 8.0
    ar: tuple = ()
    ma: tuple = ()
    sigma: float = 1.0
    amplitude: float = 0.0
    period: float = ANNUAL_PERIOD
    seed: int = 0
    start_time: str = "1998-02-01T00:00:00Z"
    step_seconds: int = THREE_HOURS

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown generator settings: {sorted(unknown)}")
        if "n" not in known:
            raise ConfigError("generator spec needs n")
        known["ar"] = tuple(float(v) for v in known.get("ar", ()))
        known["ma"] = tuple(float(v) for v in known.get("ma", ()))
        return cls(**known)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mean": self.mean, "ar": list(self.ar), "ma": list(self.ma),
            "sigma": self.sigma, "amplitude": self.amplitude, "period": self.period,
            "seed": self.seed, "start_time": self.start_time, "step_seconds": self.step_seconds,
        }


PRESETS = {
    "windlike": dict(n=11000, mean=8.0, ar=(0.8,), sigma=0.8, amplitude=4.0,
                     period=ANNUAL_PERIOD, seed=2024),
    "constant": dict(n=100, mean=8.0, sigma=0.0, seed=0),
}


def preset(name: str, **overrides) -> GeneratorSpec:
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    base.update({k: v for k, v in overrides.items() if v is not None})
    return GeneratorSpec.from_dict(base)


def generate(spec: GeneratorSpec):
    """Draw the series described by ``spec``.

    Returns
    -------
    (TimeSeries, clip_count)
        The clipped series and the number of values raised to zero.
    """
    if spec.n < 1:
        raise ConfigError("n must be at least 1")
    if spec.sigma < 0:
        raise ConfigError("sigma must be non-negative")
    noise_model = ArmaModel.from_coeffs(spec.ar, spec.ma, 0.0, spec.sigma**2)
    if not check_stationarity(noise_model, "unit-root"):
        raise NonStationary("generator AR coefficients are not stationary")
    noise = simulate_arma(noise_model, spec.n, spec.seed).values
    t = np.arange(spec.n, dtype=np.float64)
    values = spec.mean + noise
    if spec.amplitude:
        values = values + spec.amplitude * np.sin(2.0 * math.pi * t / spec.period)
    clipped = int(np.count_nonzero(values < 0))
    values = np.maximum(values, 0.0)
    start = parse_timestamp(spec.start_time)
    return TimeSeries(start, int(spec.step_seconds), values), clipped
