"""Ingest, clean, split, scale, difference and window wind-speed series."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    ConstantSeries,
    EmptyPartition,
    GapTooLong,
    MalformedRow,
    NegativeSpeed,
    NonUniformSpacing,
    SeriesTooShort,
)

THREE_HOURS = 10800
MAX_GAP_STEPS = 2
CSV_HEADER = ("timestamp", "wind_speed_mps")
_MISSING_TOKENS = {"", "nan", "na", "null", "none"}


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled wind-speed record.

    Attributes
    ----------
    start_time : int
        UTC epoch seconds of the first sample.
    step_seconds : int
        Sampling interval in seconds.
    values : numpy.ndarray
        Wind speeds in m/s (read-only).
    """

    start_time: int
    step_seconds: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.step_seconds) <= 0:
            raise ValueError("step_seconds must be positive")
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("a series needs at least one value")

    def __len__(self) -> int:
        return int(self.values.size)

    def time_at(self, index: int) -> int:
        return int(self.start_time) + int(index) * int(self.step_seconds)

    def timestamps(self) -> list[str]:
        return [format_timestamp(self.time_at(i)) for i in range(len(self))]

    def with_values(self, values, offset: int = 0) -> "TimeSeries":
        """Same grid, new values starting ``offset`` steps later."""
        return replace(self, start_time=self.time_at(offset), values=values)


@dataclass(frozen=True)
class ScalingParams:
    source_min: float
    source_max: float
    target_lo: float = 0.1
    target_hi: float = 0.9

    def __post_init__(self):
        if not self.source_min < self.source_max:
            raise ValueError("source_min must be below source_max")
        if not self.target_lo < self.target_hi:
            raise ValueError("target_lo must be below target_hi")


@dataclass(frozen=True)
class SupervisedSet:
    """Lag windows (oldest value first) paired with horizon-ahead targets.

    ``target_index[i]`` is the position, in the source series, of
    ``targets[i]``.
    """

    num_lags: int
    horizon_steps: int
    inputs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    target_index: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=np.float64).reshape(-1, self.num_lags)
        targets = np.array(self.targets, dtype=np.float64).reshape(-1)
        if inputs.shape[0] != targets.shape[0]:
            raise ValueError("inputs and targets differ in length")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be at least 1")
        idx = self.target_index
        idx = np.arange(targets.size) if idx is None else np.asarray(idx, dtype=np.int64)
        for name, arr in (("inputs", inputs), ("targets", targets), ("target_index", idx)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.targets.size)

    def subset(self, sl: slice) -> "SupervisedSet":
        return SupervisedSet(self.num_lags, self.horizon_steps, self.inputs[sl],
                             self.targets[sl], self.target_index[sl])


def parse_timestamp(text: str) -> int:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp()))


def format_timestamp(epoch_seconds: int) -> str:
    dt = datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _values_of(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def _like(series, values):
    if isinstance(series, TimeSeries):
        return series.with_values(values)
    return np.asarray(values, dtype=np.float64)


def load_series(path, step_seconds: int | None = None) -> TimeSeries:
    """Read a ``timestamp,wind_speed_mps`` CSV into a cleaned series.

    Missing values (blank or ``nan`` fields, or absent grid rows) spanning at
    most two consecutive steps are filled by linear interpolation.

    Parameters
    ----------
    path : str or Path
        CSV file location.
    step_seconds : int, optional
        Grid spacing; inferred as the smallest timestamp increment when
        omitted (and defaulting to three hours for a single row).

    Raises
    ------
    MalformedRow, NonUniformSpacing, NegativeSpeed, GapTooLong
    """
    times: list[int] = []
    speeds: list[float] = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedRow(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise MalformedRow(f"line {lineno}: expected 2 fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[0])
            except ValueError as exc:
                raise MalformedRow(f"line {lineno}: bad timestamp {row[0]!r}") from exc
            raw = row[1].strip()
            if raw.lower() in _MISSING_TOKENS:
                val = math.nan
            else:
                try:
                    val = float(raw)
                except ValueError as exc:
                    raise MalformedRow(f"line {lineno}: bad speed {raw!r}") from exc
                if math.isinf(val):
                    raise MalformedRow(f"line {lineno}: infinite speed")
                if val < 0:
                    raise NegativeSpeed(f"line {lineno}: negative wind speed {val}")
            if times and ts <= times[-1]:
                raise MalformedRow(f"line {lineno}: timestamps must be strictly increasing")
            times.append(ts)
            speeds.append(val)
    if not times:
        raise MalformedRow("no data rows")
    return _regularize(times, speeds, step_seconds)


def _regularize(times, speeds, step_seconds) -> TimeSeries:
    t = np.asarray(times, dtype=np.int64)
    if step_seconds is None:
        step_seconds = int(np.diff(t).min()) if t.size > 1 else THREE_HOURS
    step = int(step_seconds)
    offsets = t - t[0]
    if np.any(offsets % step):
        raise NonUniformSpacing(f"timestamps are not on a {step}s grid")
    slots = offsets // step
    grid = np.full(int(slots[-1]) + 1, np.nan)
    grid[slots] = speeds
    return TimeSeries(int(t[0]), step, fill_gaps(grid))


def fill_gaps(values, max_gap: int = MAX_GAP_STEPS) -> np.ndarray:
    """Linearly interpolate NaN runs no longer than ``max_gap``."""
    v = np.array(values, dtype=np.float64)
    missing = np.isnan(v)
    if not missing.any():
        return v
    if missing[0] or missing[-1]:
        raise GapTooLong("missing values at the edge of the record cannot be interpolated")
    idx = np.flatnonzero(missing)
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    longest = max(len(r) for r in runs)
    if longest > max_gap:
        start = next(r for r in runs if len(r) == longest)[0]
        raise GapTooLong(f"gap of {longest} steps at index {start} exceeds {max_gap}")
    good = ~missing
    v[missing] = np.interp(idx, np.flatnonzero(good), v[good])
    return v


def write_series(path, series: TimeSeries) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for ts, val in zip(series.timestamps(), series.values):
            w.writerow((ts, repr(float(val))))


def train_size(n: int, train_fraction: float) -> int:
    """``floor(n * fraction)``, immune to round-off such as 700 * 0.7 = 489.99..."""
    return math.floor(round(n * train_fraction, 9))


def split_train_test(series: TimeSeries, train_fraction: float = 0.7):
    """Chronological split: the first ``floor(n * fraction)`` points train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(series)
    n_train = train_size(n, train_fraction)
    if n_train == 0 or n_train == n:
        raise EmptyPartition(f"fraction {train_fraction} of {n} points leaves an empty partition")
    vals = series.values
    return series.with_values(vals[:n_train]), series.with_values(vals[n_train:], n_train)


def fit_scaler(series, target_lo: float = 0.1, target_hi: float = 0.9) -> ScalingParams:
    vals = _values_of(series)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if not lo < hi:
        raise ConstantSeries("cannot fit a scaler to a constant series")
    return ScalingParams(lo, hi, float(target_lo), float(target_hi))


def apply_scale(params: ScalingParams, x):
    span = params.source_max - params.source_min
    width = params.target_hi - params.target_lo
    return params.target_lo + (np.asarray(x, dtype=np.float64) - params.source_min) * (width / span)


def invert_scale(params: ScalingParams, u):
    span = params.source_max - params.source_min
    width = params.target_hi - params.target_lo
    return params.source_min + (np.asarray(u, dtype=np.float64) - params.target_lo) * (span / width)


def out_of_range_count(params: ScalingParams, x) -> int:
    """Number of values that extrapolate beyond the fitted source range."""
    x = np.asarray(x, dtype=np.float64)
    return int(np.count_nonzero((x < params.source_min) | (x > params.source_max)))


def mean_adjust(series):
    """Return ``(series - mean, mean)``."""
    vals = _values_of(series)
    if vals.size == 0:
        raise SeriesTooShort("cannot mean-adjust an empty series")
    mean = float(np.mean(vals))
    return _like(series, vals - mean), mean


def restore_mean(series, mean: float):
    return _like(series, _values_of(series) + mean)


def difference(series, d: int = 1):
    """Apply the ``(1 - L)`` operator ``d`` times."""
    vals = _values_of(series)
    if d < 0:
        raise ValueError("difference order must be non-negative")
    if vals.size <= d:
        raise SeriesTooShort(f"need more than {d} values to difference {d} times")
    out = np.diff(vals, n=d) if d else vals.copy()
    if isinstance(series, TimeSeries):
        return series.with_values(out, d)
    return out


def leading_seeds(series, d: int) -> np.ndarray:
    """First value of the series at each differencing level 0..d-1."""
    vals = _values_of(series)
    if vals.size <= d:
        raise SeriesTooShort(f"need more than {d} values")
    return np.array([np.diff(vals, n=k)[0] for k in range(d)], dtype=np.float64)


def trailing_seeds(series, d: int) -> np.ndarray:
    """Last value of the series at each differencing level 0..d-1."""
    vals = _values_of(series)
    if vals.size <= d:
        raise SeriesTooShort(f"need more than {d} values")
    return np.array([np.diff(vals, n=k)[-1] for k in range(d)], dtype=np.float64)


def integrate(diffed, seed_values, d: int = 1):
    """Undo ``difference`` using the leading value of every level."""
    seeds = np.asarray(seed_values, dtype=np.float64).reshape(-1)
    if seeds.size != d:
        raise ValueError(f"need {d} seed values, got {seeds.size}")
    out = np.asarray(_values_of(diffed), dtype=np.float64)
    for level in range(d - 1, -1, -1):
        out = np.concatenate(([seeds[level]], seeds[level] + np.cumsum(out)))
    if isinstance(diffed, TimeSeries):
        return diffed.with_values(out, -d)
    return out


def make_supervised(series, num_lags: int, horizon_steps: int) -> SupervisedSet:
    """Slide a ``num_lags`` window; the window ending at ``i`` targets ``i + horizon``."""
    vals = _values_of(series)
    if num_lags < 1 or horizon_steps < 1:
        raise ValueError("num_lags and horizon_steps must be at least 1")
    n = vals.size
    count = n - num_lags - horizon_steps + 1
    if count < 1:
        raise SeriesTooShort(
            f"{n} values cannot supply {num_lags} lags at horizon {horizon_steps}")
    windows = np.lib.stride_tricks.sliding_window_view(vals, num_lags)[:count]
    first_target = num_lags - 1 + horizon_steps
    index = np.arange(first_target, first_target + count)
    return SupervisedSet(num_lags, horizon_steps, windows, vals[index], index)
