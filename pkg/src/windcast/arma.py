"""ARMA(p, q) and ARIMA(p, d, q) estimation, simulation and forecasting.

Coefficients follow the lag-operator form ``Psi(L) x_t = Phi(L) e_t`` with
``Psi(L) = 1 - sum psi_s L^s`` and ``Phi(L) = 1 - sum phi_s L^s`` on the
mean-adjusted series, so that

    x_t = sum psi_s x_{t-s} + e_t - sum phi_s e_{t-s}.

Residuals before the first usable observation are taken as zero (conditional
sum of squares).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ArmaError,
    InsufficientHistory,
    NonStationary,
    SeriesTooShort,
    SingularRegression,
)
from .series import THREE_HOURS, TimeSeries, _values_of, difference, leading_seeds

BURN_IN = 500
ROOT_MARGIN = 1e-8


@dataclass(frozen=True)
class ArmaModel:
    """Fitted ARMA model.

    ``sse`` and ``nobs`` describe the conditional residuals of the fit;
    ``warning`` is set when the nonlinear refinement was abandoned and the
    two-stage regression estimate was kept instead.
    """

    p: int
    q: int
    ar_coeffs: tuple[float, ...]
    ma_coeffs: tuple[float, ...]
    mean: float = 0.0
    noise_variance: float = 1.0
    sse: float = float("nan")
    nobs: int = 0
    iterations: int = 0
    warning: str | None = None

    def __post_init__(self):
        ar = tuple(float(c) for c in self.ar_coeffs)
        ma = tuple(float(c) for c in self.ma_coeffs)
        if len(ar) != self.p or len(ma) != self.q:
            raise ValueError("coefficient counts must match the orders")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        object.__setattr__(self, "ar_coeffs", ar)
        object.__setattr__(self, "ma_coeffs", ma)

    @classmethod
    def from_coeffs(cls, ar=(), ma=(), mean=0.0, noise_variance=1.0) -> "ArmaModel":
        return cls(len(ar), len(ma), tuple(ar), tuple(ma), mean, noise_variance)


@dataclass(frozen=True)
class ArimaModel:
    inner: ArmaModel
    d: int
    seed_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be non-negative")
        object.__setattr__(self, "seed_values", tuple(float(v) for v in self.seed_values))


@dataclass(frozen=True)
class OrderScore:
    p: int
    q: int
    aic: float
    mdl: float
    noise_variance: float
    perfect_fit: bool = False


@dataclass(frozen=True)
class StationarityReport:
    """Outcome of a stationarity check plus diagnostics for both rules.

    Truthiness follows ``stationary``, the verdict of the requested method.
    """

    stationary: bool
    method: str
    magnitude_ok: bool
    unit_root_ok: bool
    max_abs_coefficient: float
    ar_roots: tuple[complex, ...]
    ma_roots: tuple[complex, ...]

    def __bool__(self):
        return self.stationary

    @property
    def ar_root_moduli(self) -> tuple[float, ...]:
        return tuple(sorted(abs(r) for r in self.ar_roots))

    @property
    def ma_root_moduli(self) -> tuple[float, ...]:
        return tuple(sorted(abs(r) for r in self.ma_roots))

    @property
    def methods_disagree(self) -> bool:
        return self.magnitude_ok != self.unit_root_ok


def format_operator(coeffs) -> str:
    """Render ``1 - sum c_s L^s`` the way the coefficient tables print it."""
    out = "1"
    for s, c in enumerate(coeffs, 1):
        term = "L" if s == 1 else f"L^{s}"
        sign = "-" if c >= 0 else "+"
        out += f" {sign} {abs(c):.6g} {term}"
    return out


def _operator_roots(coeffs) -> tuple[complex, ...]:
    # roots of 1 - c_1 z - ... - c_m z^m
    if not len(coeffs):
        return ()
    poly = np.concatenate(([1.0], -np.asarray(coeffs, dtype=np.float64)))
    trimmed = np.trim_zeros(poly[::-1], "f")
    if trimmed.size <= 1:
        return ()
    return tuple(complex(r) for r in np.roots(trimmed))


def check_stationarity(model: ArmaModel, method: str = "unit-root") -> StationarityReport:
    """Check the AR operator for stationarity.

    ``magnitude`` requires every AR and MA coefficient to be below one in
    absolute value; ``unit-root`` requires every root of ``Psi(z)`` to lie
    outside the unit circle by more than 1e-8.
    """
    if method not in ("unit-root", "magnitude"):
        raise ValueError(f"unknown stationarity method {method!r}")
    coeffs = np.abs(np.concatenate((model.ar_coeffs, model.ma_coeffs)))
    max_abs = float(coeffs.max()) if coeffs.size else 0.0
    magnitude_ok = bool(max_abs < 1.0)
    ar_roots = _operator_roots(model.ar_coeffs)
    unit_root_ok = all(abs(r) > 1.0 + ROOT_MARGIN for r in ar_roots)
    return StationarityReport(
        stationary=unit_root_ok if method == "unit-root" else magnitude_ok,
        method=method,
        magnitude_ok=magnitude_ok,
        unit_root_ok=unit_root_ok,
        max_abs_coefficient=max_abs,
        ar_roots=ar_roots,
        ma_roots=_operator_roots(model.ma_coeffs),
    )


def _lag_matrix(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """Columns x[t-1], ..., x[t-lags] for t = start .. n-1."""
    n = x.size
    return np.column_stack([x[start - s:n - s] for s in range(1, lags + 1)])


def _lstsq(design: np.ndarray, target: np.ndarray, what: str) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise SingularRegression(f"{what} regression is singular")
    return coef


def _css_jacobian(x, e, ar, ma, p, q):
    """d e_t / d(psi, phi) for t >= p, one column per coefficient."""
    n = x.size
    cols = []
    for j in range(1, p + 1):
        u = np.zeros(n)
        u[p:] = -x[p - j:n - j]
        cols.append(kernels.recursive_filter(u, ma, p)[p:])
    for j in range(1, q + 1):
        u = np.zeros(n)
        u[max(p, j):] = e[max(p, j) - j:n - j]
        cols.append(kernels.recursive_filter(u, ma, p)[p:])
    return np.column_stack(cols)


def _admissible(psi, phi) -> bool:
    """Stationary AR operator and invertible MA operator."""
    return all(abs(r) > 1.0 + ROOT_MARGIN
               for r in _operator_roots(psi) + _operator_roots(phi))


def _hannan_rissanen(x: np.ndarray, p: int, q: int):
    n = x.size
    if q == 0:
        coef = _lstsq(_lag_matrix(x, p, p), x[p:], "autoregression")
        return coef, np.zeros(0)
    long_order = max(min(20, n // 4), p + q)
    long_ar = _lstsq(_lag_matrix(x, long_order, long_order), x[long_order:], "long autoregression")
    proxy = np.zeros(n)
    proxy[long_order:] = x[long_order:] - _lag_matrix(x, long_order, long_order) @ long_ar
    start = long_order + q
    if n - start <= p + q:
        raise SeriesTooShort("too few observations for the two-stage regression")
    parts = []
    if p:
        parts.append(_lag_matrix(x, p, start))
    parts.append(_lag_matrix(proxy, q, start))
    coef = _lstsq(np.column_stack(parts), x[start:], "two-stage")
    return coef[:p], -coef[p:]


def estimate_arma(series, p: int, q: int, max_iter: int = 50, tol: float = 1e-10) -> ArmaModel:
    """Estimate an ARMA(p, q) model.

    A two-stage regression (long autoregression for residual proxies, then
    least squares on lagged values and lagged proxies) gives starting values
    that are polished by Gauss-Newton on the conditional sum of squares.  When
    the starting point is stationary and invertible, refinement steps that
    would leave that region are shortened until they do not.

    Parameters
    ----------
    series : TimeSeries or array_like
        Observations in m/s; the mean is removed internally and stored.
    p, q : int
        AR and MA orders.
    max_iter : int
        Gauss-Newton iteration cap.
    tol : float
        Stop once the relative SSE decrease falls below this value.

    Returns
    -------
    ArmaModel
    """
    vals = _values_of(series)
    if p < 0 or q < 0:
        raise ValueError("orders must be non-negative")
    n = vals.size
    k = p + q + 1
    if n < 1 or (p + q > 0 and n < 10 * k):
        raise SeriesTooShort(f"ARMA({p},{q}) needs at least {10 * k} observations, got {n}")
    mean = float(np.mean(vals))
    x = vals - mean
    if p == q == 0:
        sse = float(np.sum(x**2))
        return ArmaModel(0, 0, (), (), mean, sse / n, sse, n)

    psi, phi = _hannan_rissanen(x, p, q)
    e = kernels.arma_residuals(x, psi, phi)
    sse = float(e @ e)
    stage2 = (psi, phi, sse)
    iterations = 0
    warning = None
    if not math.isfinite(sse):
        warning = "two-stage estimate produced non-finite residuals"
    else:
        beta = np.concatenate((psi, phi))
        # once inside the stationary/invertible region, stay there: outside it
        # near-cancelling AR/MA root pairs can chase noise in the conditional SSE
        constrained = _admissible(psi, phi)
        for iterations in range(1, max_iter + 1):
            jac = _css_jacobian(x, e, beta[:p], beta[p:], p, q)
            step = np.linalg.lstsq(jac, -e[p:], rcond=None)[0]
            if not np.all(np.isfinite(step)):
                warning = "Gauss-Newton step was not finite"
                break
            accepted = False
            lam = 1.0
            for _ in range(30):
                trial = beta + lam * step
                e_trial = kernels.arma_residuals(x, trial[:p], trial[p:])
                with np.errstate(over="ignore", invalid="ignore"):
                    sse_trial = float(e_trial @ e_trial)
                if (math.isfinite(sse_trial) and sse_trial <= sse
                        and (not constrained or _admissible(trial[:p], trial[p:]))):
                    accepted = True
                    break
                lam *= 0.5
            if not accepted:
                break
            rel = (sse - sse_trial) / sse if sse > 0 else 0.0
            beta, e, sse = trial, e_trial, sse_trial
            if rel < tol:
                break
        psi, phi = beta[:p], beta[p:]
    if warning is not None or not math.isfinite(sse) or sse > stage2[2]:
        warning = warning or "refinement diverged"
        psi, phi, sse = stage2
        warnings.warn(f"ARMA({p},{q}) refinement abandoned: {warning}", RuntimeWarning)
        if not math.isfinite(sse):
            raise ArmaError("two-stage estimate is unusable (non-finite residuals)")
    nobs = n - p
    return ArmaModel(p, q, tuple(psi), tuple(phi), mean, sse / nobs, sse, nobs, iterations, warning)


def conditional_residuals(model: ArmaModel, series) -> np.ndarray:
    """Residuals of ``series`` under ``model`` with zero pre-sample values."""
    x = _values_of(series) - model.mean
    return kernels.arma_residuals(x, model.ar_coeffs, model.ma_coeffs)


def forecast_from_state(ar, ma, values, residuals, steps: int) -> np.ndarray:
    """Recursive forecast of a mean-adjusted series from its recent state.

    ``values`` and ``residuals`` are the most recent mean-adjusted
    observations and residuals, oldest first; future residuals are zero.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    x = np.asarray(values, dtype=np.float64)
    e = np.asarray(residuals, dtype=np.float64)
    if x.shape != e.shape:
        raise ValueError("values and residuals must align")
    if steps == 0:
        return np.zeros(0)
    if x.size == 0:
        x = e = np.zeros(1)
    return kernels.rolling_forecast(x, e, ar, ma, x.size - 1, x.size - 1, steps)[0]


def forecast_arma(model: ArmaModel, history, steps: int) -> np.ndarray:
    """Forecast ``steps`` values past the end of ``history`` (m/s)."""
    vals = _values_of(history)
    if vals.size < max(model.p, model.q) or vals.size == 0:
        raise InsufficientHistory(
            f"ARMA({model.p},{model.q}) forecast needs {max(model.p, model.q, 1)} observations")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    x = vals - model.mean
    e = kernels.arma_residuals(x, model.ar_coeffs, model.ma_coeffs)
    return forecast_from_state(model.ar_coeffs, model.ma_coeffs, x, e, steps) + model.mean


def rolling_forecast_arma(model: ArmaModel, values, first_origin: int, horizon: int) -> np.ndarray:
    """Forecast paths of length ``horizon`` from every origin ``>= first_origin``.

    Row ``i`` is the path issued at origin ``first_origin + i`` using only
    data up to that origin; origins run to ``len(values) - 1``.
    """
    vals = _values_of(values)
    x = vals - model.mean
    e = kernels.arma_residuals(x, model.ar_coeffs, model.ma_coeffs)
    paths = kernels.rolling_forecast(
        x, e, model.ar_coeffs, model.ma_coeffs, first_origin, vals.size - 1, horizon)
    return paths + model.mean


def simulate_arma(model: ArmaModel, n: int, seed: int, burn_in: int = BURN_IN,
                  start_time: int = 0, step_seconds: int = THREE_HOURS) -> TimeSeries:
    """Draw a Gaussian ARMA realisation of length ``n``.

    Raises
    ------
    NonStationary
        The AR operator has a root on or inside the unit circle.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not check_stationarity(model, "unit-root"):
        raise NonStationary("cannot simulate a non-stationary model")
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn_in) * math.sqrt(model.noise_variance)
    y = kernels.arma_filter(eps, model.ar_coeffs, model.ma_coeffs)[burn_in:]
    return TimeSeries(start_time, step_seconds, y + model.mean)


def information_criterion(model, residual_sse: float, n: int, kind: str = "aic") -> float:
    """AIC ``n ln(s2) + 2k`` or MDL ``n ln(s2) + k ln(n)`` with ``k = p + q + 1``.

    ``model`` may be an ArmaModel or a ``(p, q)`` pair.  A zero SSE yields
    ``-inf`` and a RuntimeWarning.
    """
    p, q = (model.p, model.q) if isinstance(model, ArmaModel) else model
    k = p + q + 1
    if n <= k:
        raise ValueError(f"need n > {k} observations, got {n}")
    if residual_sse < 0:
        raise ValueError("residual_sse must be non-negative")
    if kind not in ("aic", "mdl"):
        raise ValueError(f"unknown criterion {kind!r}")
    if residual_sse == 0:
        warnings.warn("zero residual SSE: information criterion undefined", RuntimeWarning)
        return -math.inf
    base = n * math.log(residual_sse / n)
    return base + (2 * k if kind == "aic" else k * math.log(n))


def select_order(series, p_max: int, q_max: int, kind: str = "mdl"):
    """Grid search over ``0..p_max`` x ``0..q_max`` by information criterion.

    MDL is the default: under the conditional sum of squares, AIC's lighter
    penalty often prefers over-sized models whose AR and MA roots cancel.

    All candidates are scored on the same residual window (from index
    ``max(p_max, q_max)`` onward).  Ties go to smaller ``p + q``, then smaller
    ``p``.

    Returns
    -------
    (ArmaModel, list of OrderScore)
    """
    if p_max < 0 or q_max < 0:
        raise ValueError("order limits must be non-negative")
    if kind not in ("aic", "mdl"):
        raise ValueError(f"unknown criterion {kind!r}")
    vals = _values_of(series)
    start = max(p_max, q_max)
    n_eff = vals.size - start
    grid = []
    fitted = []
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    model = estimate_arma(vals, p, q)
                    e = conditional_residuals(model, vals)[start:]
                    sse = float(e @ e)
                    aic = information_criterion((p, q), sse, n_eff, "aic")
                    mdl = information_criterion((p, q), sse, n_eff, "mdl")
            except (ArmaError, SeriesTooShort, ValueError):
                continue
            score = OrderScore(p, q, aic, mdl, sse / n_eff, sse == 0)
            grid.append(score)
            fitted.append((getattr(score, kind), p + q, p, model))
    if not fitted:
        raise ArmaError("every order in the grid failed to estimate")
    fitted.sort(key=lambda item: item[:3])
    return fitted[0][3], grid


def fit_arima(series, p: int, d: int, q: int) -> ArimaModel:
    """Difference ``d`` times, then fit ARMA(p, q); the differenced mean is the drift."""
    vals = _values_of(series)
    diffed = difference(vals, d)
    return ArimaModel(estimate_arma(diffed, p, q), d, tuple(leading_seeds(vals, d)))


def _integrate_paths(paths: np.ndarray, tails: np.ndarray) -> np.ndarray:
    # tails[:, k] is the last observed value at differencing level k
    out = paths
    for level in range(tails.shape[1] - 1, -1, -1):
        out = tails[:, level:level + 1] + np.cumsum(out, axis=1)
    return out


def forecast_arima(model: ArimaModel, history, steps: int) -> np.ndarray:
    """Forecast in differenced space, then integrate from the last observations."""
    vals = _values_of(history)
    if vals.size <= model.d:
        raise InsufficientHistory(f"ARIMA with d={model.d} needs more than {model.d} observations")
    diffed = np.diff(vals, n=model.d) if model.d else vals
    path = forecast_arma(model.inner, diffed, steps)
    if model.d == 0:
        return path
    tails = np.array([[np.diff(vals, n=k)[-1] for k in range(model.d)]])
    return _integrate_paths(path[None, :], tails)[0]


def rolling_forecast_arima(model: ArimaModel, values, first_origin: int, horizon: int) -> np.ndarray:
    """ARIMA counterpart of ``rolling_forecast_arma`` in the original units."""
    vals = _values_of(values)
    d = model.d
    if first_origin < d:
        raise InsufficientHistory(f"origins must be at least {d} for d={d}")
    diffed = np.diff(vals, n=d) if d else vals
    paths = rolling_forecast_arma(model.inner, diffed, first_origin - d, horizon)
    if d == 0:
        return paths
    origins = np.arange(first_origin, vals.size)
    tails = np.column_stack([np.diff(vals, n=k)[origins - k] for k in range(d)])
    return _integrate_paths(paths, tails)
