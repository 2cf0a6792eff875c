"""Single-predictor polynomial autoregression fitted by least squares.

The forecast for ``p`` steps ahead is a polynomial in the latest observation,
``x[t+p] = a_0 + a_1 x[t] + ... + a_n x[t]^n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegreeTooLarge,
    LengthMismatch,
    PolyfitError,
    RankDeficient,
    UndefinedCorrelation,
)
from .evaluation import correlation_r
from .series import SupervisedSet

MAX_DEGREE = 10


@dataclass(frozen=True)
class PolynomialModel:
    """Fitted polynomial with ascending coefficients ``a_0 .. a_n``."""

    degree: int
    coefficients: tuple[float, ...]
    horizon_steps: int = 1
    train_mse: float = float("nan")
    train_r: float | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) != self.degree + 1:
            raise ValueError("need degree + 1 coefficients")
        if not all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    def predict(self, y):
        return eval_polynomial(self, y)


def eval_polynomial(model: PolynomialModel, y):
    """Horner evaluation; accepts scalars or arrays."""
    y = np.asarray(y, dtype=np.float64)
    acc = np.zeros_like(y)
    for a in reversed(model.coefficients):
        acc = acc * y + a
    return float(acc) if acc.ndim == 0 else acc


def _check_single_lag(pairs: SupervisedSet):
    if pairs.num_lags != 1:
        raise PolyfitError("polynomial models use exactly one lag")


def _shift_basis(b: np.ndarray, c: float) -> np.ndarray:
    """Coefficients of sum b_k (y - c)^k re-expressed in powers of y."""
    n = b.size
    a = np.zeros(n)
    for k in range(n):
        for j in range(k + 1):
            a[j] += b[k] * comb(k, j) * (-c) ** (k - j)
    return a


def fit_polynomial(pairs: SupervisedSet, degree: int) -> PolynomialModel:
    """Least-squares polynomial fit of targets on the single lag.

    The Vandermonde matrix is built on mean-centred predictors and solved by
    QR decomposition; coefficients are mapped back to raw powers.

    Raises
    ------
    DegreeTooLarge
        ``degree`` exceeds 10.
    RankDeficient
        Fewer than ``degree + 1`` distinct predictor values.
    """
    _check_single_lag(pairs)
    if degree < 0:
        raise PolyfitError("degree must be non-negative")
    if degree > MAX_DEGREE:
        raise DegreeTooLarge(f"degree {degree} exceeds the cap of {MAX_DEGREE}")
    y = pairs.inputs[:, 0]
    target = pairs.targets
    if y.size < degree + 1 or np.unique(y).size < degree + 1:
        raise RankDeficient(f"degree {degree} needs {degree + 1} distinct predictor values")

    centre = float(np.mean(y))
    vander = np.vander(y - centre, degree + 1, increasing=True)
    # column scaling keeps R's diagonal comparable across powers
    norms = np.linalg.norm(vander, axis=0)
    norms[norms == 0] = 1.0
    q, r = np.linalg.qr(vander / norms)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * 1e-13:
        raise RankDeficient("Vandermonde design is numerically rank deficient")
    b = solve_triangular(r, q.T @ target) / norms
    coeffs = _shift_basis(b, centre)

    fitted = vander @ b
    resid = target - fitted
    mse = float(np.mean(resid**2))
    try:
        r_val = correlation_r(target, fitted)
    except (UndefinedCorrelation, LengthMismatch):
        r_val = None
    return PolynomialModel(degree, tuple(coeffs), pairs.horizon_steps, mse, r_val)


def select_degree(train: SupervisedSet, candidates, validation: SupervisedSet) -> PolynomialModel:
    """Fit every candidate degree and keep the lowest validation MSE.

    Ties go to the lower degree; MSEs closer than round-off (relative 1e-9,
    or 1e-12 of the mean squared target) count as ties.  Candidates that fail
    to fit are skipped.
    """
    candidates = list(candidates)
    if not candidates:
        raise PolyfitError("no candidate degrees given")
    scored = []
    errors = []
    for deg in candidates:
        try:
            model = fit_polynomial(train, deg)
        except PolyfitError as exc:
            errors.append(exc)
            continue
        pred = eval_polynomial(model, validation.inputs[:, 0])
        scored.append((float(np.mean((validation.targets - pred) ** 2)), deg, model))
    if not scored:
        if len(errors) == 1:
            raise errors[0]
        raise PolyfitError("; ".join(str(e) for e in errors))
    best = min(item[0] for item in scored)
    tol = 1e-9 * best + 1e-12 * float(np.mean(validation.targets**2))
    scored.sort(key=lambda item: item[1])
    return next(model for mse, _, model in scored if mse <= best + tol)
