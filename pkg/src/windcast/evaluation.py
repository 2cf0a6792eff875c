"""Fit statistics and ranked comparisons for observed/predicted pairs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import LengthMismatch, SeriesTooShort, UndefinedCorrelation
from .series import _values_of


@dataclass(frozen=True)
class MetricReport:
    """Error statistics for one (model, horizon) pair.

    ``msre`` is None when an observed value is zero; ``r`` and ``r_squared``
    are None when either sequence is constant.
    """

    n: int
    r: float | None
    mse: float
    msre: float | None
    ce: float | None
    r_squared: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(observed, predicted, min_len=1):
    o = np.asarray(observed, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if o.size != p.size:
        raise LengthMismatch(f"observed has {o.size} values, predicted {p.size}")
    if o.size < min_len:
        raise LengthMismatch(f"need at least {min_len} pairs")
    return o, p


def correlation_r(observed, predicted) -> float:
    """Pearson correlation between observations and predictions."""
    o, p = _pair(observed, predicted, 2)
    do = o - o.mean()
    dp = p - p.mean()
    sxx = float(do @ do)
    syy = float(dp @ dp)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelation("correlation is undefined for a constant sequence")
    r = float(do @ dp) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def mse(observed, predicted) -> float:
    o, p = _pair(observed, predicted)
    err = o - p
    return float(err @ err) / o.size


def auxiliary_metrics(observed, predicted):
    """Return ``(msre, ce, r_squared)``.

    msre is None if any observation is zero; ce is None for constant
    observations; r_squared is None when the correlation is undefined.
    """
    o, p = _pair(observed, predicted)
    err = o - p
    msre = None
    if np.all(o != 0):
        rel = err / o
        msre = float(rel @ rel) / o.size
    dev = o - o.mean()
    ss_tot = float(dev @ dev)
    ce = None if ss_tot == 0 else 1.0 - float(err @ err) / ss_tot
    try:
        r = correlation_r(o, p)
        r2 = r * r
    except (UndefinedCorrelation, LengthMismatch):
        r2 = None
    return msre, ce, r2


def evaluate(observed, predicted) -> MetricReport:
    o, p = _pair(observed, predicted)
    try:
        r = correlation_r(o, p)
    except (UndefinedCorrelation, LengthMismatch):
        r = None
    msre, ce, _ = auxiliary_metrics(o, p)
    return MetricReport(
        n=int(o.size),
        r=r,
        mse=mse(o, p),
        msre=msre,
        ce=ce,
        r_squared=None if r is None else r * r,
    )


def persistence_baseline(series, horizon_steps: int):
    """No-skill reference: the forecast for ``t + p`` is the value at ``t``.

    Returns
    -------
    (observed, predicted) : tuple of numpy.ndarray
    """
    vals = _values_of(series)
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be at least 1")
    if vals.size <= horizon_steps:
        raise SeriesTooShort(f"persistence at horizon {horizon_steps} needs more values")
    return vals[horizon_steps:].copy(), vals[:-horizon_steps].copy()


def compare_report(entries):
    """Rank ``(label, MetricReport)`` entries by MSE, then by descending r.

    The sort is stable; entries without a correlation rank after those with
    one at equal MSE.
    """
    entries = list(entries)

    def key(item):
        rep = item[1]
        r = rep.r
        return (rep.mse, 0 if r is not None else 1, -(r if r is not None else 0.0))

    return sorted(entries, key=key)


def format_ranking(entries, title: str | None = None) -> str:
    """Plain-text table of ranked entries."""
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'rank':>4}  {'model':<14}{'MSE':>12}{'R':>10}{'CE':>10}{'MSRE':>12}")

    def fmt(v, width, prec):
        return f"{'-':>{width}}" if v is None else f"{v:>{width}.{prec}f}"

    for i, (label, rep) in enumerate(compare_report(entries), 1):
        lines.append(
            f"{i:>4}  {label:<14}{fmt(rep.mse, 12, 4)}{fmt(rep.r, 10, 4)}"
            f"{fmt(rep.ce, 10, 4)}{fmt(rep.msre, 12, 5)}")
    return "\n".join(lines)
