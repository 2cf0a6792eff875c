"""Feedforward multilayer perceptrons trained by backpropagation.

Three full-batch trainers are provided: plain gradient descent,
Levenberg-Marquardt (damped Gauss-Newton on the residual Jacobian) and
Moller's scaled conjugate gradient.  Activation names follow the
``logsig`` / ``tansig`` / ``purelin`` convention.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConstantSeries, NetworkError, SizeMismatch, TrainingDiverged
from .series import (
    ScalingParams,
    SupervisedSet,
    _values_of,
    apply_scale,
    fit_scaler,
    invert_scale,
    make_supervised,
)

log = logging.getLogger(__name__)

ACTIVATIONS = ("logsig", "tansig", "purelin")
_ALIASES = {"logistic": "logsig", "sigmoid": "logsig", "tanh": "tansig", "identity": "purelin",
            "linear": "purelin"}
# spellings read as a known activation, but reported when used
_ASSUMED = {"purelm": "purelin"}
BOUNDED = {"logsig", "tansig"}
DIVERGENCE_MSE = 1e12


def canonical_activation(kind: str) -> str:
    key = kind.lower()
    if key in _ASSUMED:
        log.warning("activation %r read as %r", kind, _ASSUMED[key])
        return _ASSUMED[key]
    name = _ALIASES.get(key, key)
    if name not in ACTIVATIONS:
        raise NetworkError(f"unknown activation {kind!r}")
    return name


def apply_activation(kind: str, s):
    """Evaluate an activation on the pre-activation ``s``."""
    kind = canonical_activation(kind)
    s = np.asarray(s, dtype=np.float64)
    if kind == "logsig":
        out = 0.5 * (1.0 + np.tanh(0.5 * s))  # overflow-free 1 / (1 + e^-s)
    elif kind == "tansig":
        out = np.tanh(s)
    else:
        out = s.copy()
    return float(out) if out.ndim == 0 else out


def activation_slope(kind: str, out):
    """Derivative of the activation expressed through its output."""
    if kind == "logsig":
        return out * (1.0 - out)
    if kind == "tansig":
        return 1.0 - out * out
    return np.ones_like(out)


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int
    hidden_layer_sizes: tuple[int, ...]
    output_size: int = 1
    activations: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden_layer_sizes)
        acts = self.activations or ("logsig",) * len(hidden) + ("purelin",)
        acts = tuple(canonical_activation(a) for a in acts)
        if self.input_size < 1 or self.output_size < 1 or any(h < 1 for h in hidden):
            raise NetworkError("layer sizes must be at least 1")
        if len(acts) != len(hidden) + 1:
            raise NetworkError("need one activation per hidden layer plus the output layer")
        object.__setattr__(self, "hidden_layer_sizes", hidden)
        object.__setattr__(self, "activations", acts)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden_layer_sizes, self.output_size)


@dataclass
class MlpNetwork:
    """Weights ``W[l]`` of shape (neurons, sources) and biases ``b[l]`` per layer."""

    weights: list
    biases: list
    activations: tuple[str, ...]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1], *(w.shape[0] for w in self.weights))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_flat(self) -> np.ndarray:
        """Layer-major flattening: each layer's weights (row-major) then biases."""
        return np.concatenate([np.concatenate((w.ravel(), b)) for w, b in
                               zip(self.weights, self.biases)])

    def with_flat(self, flat) -> "MlpNetwork":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params:
            raise SizeMismatch(f"expected {self.n_params} parameters, got {flat.size}")
        weights, biases, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(flat[pos:pos + b.size].copy())
            pos += b.size
        return MlpNetwork(weights, biases, self.activations)

    def copy(self) -> "MlpNetwork":
        return self.with_flat(self.get_flat())


def init_network(config: NetworkConfig) -> MlpNetwork:
    """Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    rng = np.random.default_rng(config.seed)
    sizes = config.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(weights, biases, config.activations)


def _as_batch(network: MlpNetwork, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != network.layer_sizes[0]:
        raise SizeMismatch(f"network takes {network.layer_sizes[0]} inputs, got {x.shape[1]}")
    return x


def _forward_all(network: MlpNetwork, x: np.ndarray) -> list:
    outs = [x]
    for w, b, kind in zip(network.weights, network.biases, network.activations):
        outs.append(apply_activation(kind, outs[-1] @ w.T + b))
    return outs


def forward(network: MlpNetwork, inputs) -> np.ndarray:
    """Network output for one input vector, or a batch (one row per sample)."""
    single = np.ndim(inputs) == 1
    out = _forward_all(network, _as_batch(network, inputs))[-1]
    return out[0] if single else out


def _dataset(network: MlpNetwork, dataset):
    if isinstance(dataset, SupervisedSet):
        x, y = dataset.inputs, dataset.targets
    else:
        x, y = dataset
    x = _as_batch(network, x)
    y = np.asarray(y, dtype=np.float64).reshape(x.shape[0], -1)
    if y.shape[1] != network.layer_sizes[-1]:
        raise SizeMismatch(f"network has {network.layer_sizes[-1]} outputs, targets {y.shape[1]}")
    if x.shape[0] == 0:
        raise SizeMismatch("empty dataset")
    return x, y


def compute_gradient(network: MlpNetwork, dataset) -> np.ndarray:
    """Gradient of half the summed squared error, in ``get_flat`` order.

    ``dataset`` is a SupervisedSet or an ``(inputs, targets)`` pair.
    """
    x, y = _dataset(network, dataset)
    outs = _forward_all(network, x)
    delta = (outs[-1] - y) * activation_slope(network.activations[-1], outs[-1])
    grads = []
    for layer in range(len(network.weights) - 1, -1, -1):
        grads.append(np.concatenate(((delta.T @ outs[layer]).ravel(), delta.sum(axis=0))))
        if layer:
            delta = (delta @ network.weights[layer]) * activation_slope(
                network.activations[layer - 1], outs[layer])
    return np.concatenate(grads[::-1])


def output_jacobian(network: MlpNetwork, inputs) -> np.ndarray:
    """d(output) / d(parameters), one row per (sample, output) pair."""
    x = _as_batch(network, inputs)
    outs = _forward_all(network, x)
    n, n_out = x.shape[0], outs[-1].shape[1]
    # delta[s, o, k]: derivative of output o w.r.t. pre-activation k of this layer
    delta = np.einsum("ok,sk->sok", np.eye(n_out),
                      activation_slope(network.activations[-1], outs[-1]))
    blocks = []
    for layer in range(len(network.weights) - 1, -1, -1):
        dw = np.einsum("sok,sj->sokj", delta, outs[layer]).reshape(n, n_out, -1)
        blocks.append(np.concatenate((dw, delta), axis=2))
        if layer:
            delta = (delta @ network.weights[layer]) * activation_slope(
                network.activations[layer - 1], outs[layer])[:, None, :]
    return np.concatenate(blocks[::-1], axis=2).reshape(n * n_out, -1)


@dataclass(frozen=True)
class TrainParams:
    """Trainer settings.

    The damping schedule ``mu_*`` is used by Levenberg-Marquardt,
    ``learning_rate`` by gradient descent.  The last ``validation_fraction``
    of the training pairs is held out for early stopping.
    """

    max_epochs: int = 1000
    goal_mse: float = 1e-12
    mu0: float = 1e-3
    mu_inc: float = 10.0
    mu_dec: float = 0.1
    mu_max: float = 1e10
    learning_rate: float = 0.01
    validation_fraction: float = 0.15
    patience: int = 6
    min_gradient: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be positive")
        if min(self.mu0, self.mu_inc, self.mu_dec, self.mu_max, self.learning_rate) <= 0:
            raise ValueError("damping and learning-rate settings must be positive")
        if self.goal_mse < 0:
            raise ValueError("goal_mse must be non-negative")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in [0, 0.5]")


@dataclass
class TrainReport:
    epochs_run: int = 0
    final_train_mse: float = float("nan")
    stop_reason: str = "max_epochs"
    train_mse_history: list = field(default_factory=list)
    validation_mse_history: list = field(default_factory=list)
    best_validation_mse: float | None = None
    best_epoch: int = 0
    trainer: str = ""

    def to_dict(self) -> dict:
        return {
            "trainer": self.trainer,
            "epochs_run": self.epochs_run,
            "final_train_mse": self.final_train_mse,
            "stop_reason": self.stop_reason,
            "best_epoch": self.best_epoch,
            "best_validation_mse": self.best_validation_mse,
            "train_mse_history": list(self.train_mse_history),
            "validation_mse_history": list(self.validation_mse_history),
        }


class _Monitor:
    """Shared bookkeeping: histories, early stopping and the divergence guard."""

    def __init__(self, network, x, y, params: TrainParams, trainer: str):
        n_val = int(math.floor(x.shape[0] * params.validation_fraction))
        if n_val and x.shape[0] - n_val < 1:
            n_val = 0
        self.x, self.y = x[:x.shape[0] - n_val], y[:y.shape[0] - n_val]
        self.xv, self.yv = x[x.shape[0] - n_val:], y[y.shape[0] - n_val:]
        self.params = params
        self.template = network
        self.report = TrainReport(trainer=trainer)
        self.best_flat = network.get_flat()
        self.best_val = math.inf
        self.wait = 0

    @property
    def has_validation(self) -> bool:
        return self.xv.shape[0] > 0

    def mse_of(self, flat, x=None, y=None) -> float:
        x = self.x if x is None else x
        y = self.y if y is None else y
        out = _forward_all(self.template.with_flat(flat), x)[-1]
        return float(np.mean((out - y) ** 2))

    def initial(self, flat, mse) -> str | None:
        self.report.final_train_mse = mse
        if self.has_validation:
            self.best_val = self.mse_of(flat, self.xv, self.yv)
            self.report.best_validation_mse = self.best_val
        if mse <= self.params.goal_mse:
            self.report.stop_reason = "goal"
            return "goal"
        return None

    def end_epoch(self, flat, mse, moved: bool = True) -> str | None:
        """Record one epoch; epochs that left the weights unchanged do not
        count towards validation patience."""
        rep = self.report
        rep.epochs_run += 1
        rep.final_train_mse = mse
        rep.train_mse_history.append(mse)
        if not math.isfinite(mse) or mse > DIVERGENCE_MSE:
            rep.stop_reason = "diverged"
            raise TrainingDiverged(f"training MSE reached {mse!r} at epoch {rep.epochs_run}", rep)
        if self.has_validation:
            val = self.mse_of(flat, self.xv, self.yv)
            rep.validation_mse_history.append(val)
            if val < self.best_val:
                self.best_val, self.best_flat, self.wait = val, flat.copy(), 0
                rep.best_epoch = rep.epochs_run
                rep.best_validation_mse = val
            elif moved:
                self.wait += 1
                if self.wait >= self.params.patience:
                    return self.stop("patience")
        else:
            rep.validation_mse_history.append(None)
            self.best_flat = flat
            rep.best_epoch = rep.epochs_run
        if mse <= self.params.goal_mse:
            return self.stop("goal")
        if rep.epochs_run >= self.params.max_epochs:
            return self.stop("max_epochs")
        return None

    def stop(self, reason: str) -> str:
        self.report.stop_reason = reason
        return reason

    def result(self, flat):
        if self.has_validation:
            flat = self.best_flat
            self.report.final_train_mse = self.mse_of(flat)
        return self.template.with_flat(flat), self.report


def _mean_grad(network, flat, x, y) -> np.ndarray:
    return compute_gradient(network.with_flat(flat), (x, y)) / x.shape[0]


def train_gd(network: MlpNetwork, dataset, params: TrainParams = TrainParams()):
    """Full-batch steepest descent on the mean squared error.

    The step is ``learning_rate`` times the gradient of half the MSE, which
    keeps the learning rate independent of the number of samples.
    """
    x, y = _dataset(network, dataset)
    mon = _Monitor(network, x, y, params, "gd")
    flat = network.get_flat()
    if mon.initial(flat, mon.mse_of(flat)):
        return mon.result(flat)
    while True:
        grad = _mean_grad(network, flat, mon.x, mon.y)
        if np.linalg.norm(grad) <= params.min_gradient:
            mon.stop("min_gradient")
            break
        flat = flat - params.learning_rate * grad
        if mon.end_epoch(flat, mon.mse_of(flat)):
            break
    return mon.result(flat)


def train_lm(network: MlpNetwork, dataset, params: TrainParams = TrainParams()):
    """Levenberg-Marquardt training.

    Each epoch solves ``(J^T J + mu I) dw = -J^T r`` for the residual vector
    ``r`` and its Jacobian ``J``.  A step is accepted only if the summed squared
    error falls, after which ``mu`` shrinks by ``mu_dec``; otherwise ``mu`` grows
    by ``mu_inc`` and the solve is repeated.  Training stops once ``mu``
    exceeds ``mu_max``.
    """
    x, y = _dataset(network, dataset)
    mon = _Monitor(network, x, y, params, "lm")
    flat = network.get_flat()
    n_par = flat.size
    resid = (_forward_all(network, mon.x)[-1] - mon.y).ravel()
    sse = float(resid @ resid)
    if mon.initial(flat, sse / resid.size):
        return mon.result(flat)
    mu = params.mu0
    eye = np.eye(n_par)
    while True:
        net = network.with_flat(flat)
        jac = output_jacobian(net, mon.x)
        hess = jac.T @ jac
        grad = jac.T @ resid
        accepted = False
        while mu <= params.mu_max:
            try:
                step = np.linalg.solve(hess + mu * eye, -grad)
            except np.linalg.LinAlgError:
                mu *= params.mu_inc
                continue
            trial = flat + step
            r_trial = (_forward_all(network.with_flat(trial), mon.x)[-1] - mon.y).ravel()
            sse_trial = float(r_trial @ r_trial)
            if math.isfinite(sse_trial) and sse_trial < sse:
                flat, resid, sse = trial, r_trial, sse_trial
                mu = max(mu * params.mu_dec, 1e-300)
                accepted = True
                break
            mu *= params.mu_inc
        if not accepted:
            mon.stop("damping_ceiling")
            break
        if mon.end_epoch(flat, sse / resid.size):
            break
    return mon.result(flat)


def train_scg(network: MlpNetwork, dataset, params: TrainParams = TrainParams(),
              sigma0: float = 1e-4, lambda0: float = 1.0):
    """Scaled conjugate gradient training (no line search).

    The curvature along the search direction comes from a finite difference
    of gradients; a scalar damping ``lambda`` is raised or lowered according to
    how well the local quadratic model predicted the actual error reduction.
    One iteration counts as one epoch.
    """
    x, y = _dataset(network, dataset)
    mon = _Monitor(network, x, y, params, "scg")
    n_par = network.n_params
    w = network.get_flat()

    def err(v):
        return 0.5 * mon.mse_of(v)

    def grad(v):
        return 0.5 * _mean_grad(network, v, mon.x, mon.y)

    f_old = err(w)
    if mon.initial(w, 2.0 * f_old):
        return mon.result(w)
    g = grad(w)
    d = -g
    lam, lam_min, lam_max = lambda0, 1e-15, 1e100
    success = True
    mu = kappa = gamma = 0.0
    k = 0
    while True:
        if success:
            mu = float(d @ g)
            if mu >= 0:
                d = -g
                mu = float(d @ g)
            kappa = float(d @ d)
            if kappa < np.finfo(float).eps:
                mon.stop("min_gradient")
                break
            sigma = sigma0 / math.sqrt(kappa)
            gamma = float(d @ (grad(w + sigma * d) - g)) / sigma
        delta = gamma + lam * kappa
        if delta <= 0:
            delta = lam * kappa
            lam = lam - gamma / kappa
        alpha = -mu / delta
        w_new = w + alpha * d
        f_new = err(w_new)
        comparison = 2.0 * (f_new - f_old) / (alpha * mu)
        if comparison >= 0 and math.isfinite(f_new):
            success = True
            w, f_old = w_new, f_new
        else:
            success = False
        if comparison < 0.25:
            lam = min(4.0 * lam, lam_max)
        if comparison > 0.75:
            lam = max(0.5 * lam, lam_min)
        k += 1
        if success:
            g_old, g = g, grad(w)
            if np.linalg.norm(g) <= params.min_gradient:
                mon.end_epoch(w, 2.0 * f_old)
                mon.stop("min_gradient")
                break
            if k % n_par == 0:
                d = -g
            else:
                beta = float((g_old - g) @ g) / mu
                d = beta * d - g
        if lam >= lam_max:
            mon.stop("damping_ceiling")
            break
        if mon.end_epoch(w, 2.0 * f_old, moved=success):
            break
    return mon.result(w)


TRAINERS = {"gd": train_gd, "lm": train_lm, "scg": train_scg,
            "traingd": train_gd, "trainlm": train_lm, "trainscg": train_scg}


def get_trainer(name: str):
    try:
        return TRAINERS[name.lower()]
    except KeyError:
        raise NetworkError(f"unknown trainer {name!r}") from None


def trial_seed(base_seed: int, trial: int) -> int:
    """Deterministic per-trial seed; trial 0 keeps the base seed."""
    if trial == 0:
        return int(base_seed)
    return int(np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1)[0])


@dataclass
class MlpForecaster:
    """Trained network plus the scaling and windowing needed to forecast."""

    config: NetworkConfig
    network: MlpNetwork
    scaling: ScalingParams
    num_lags: int
    horizon_steps: int
    trainer: str = "lm"

    @property
    def scales_targets(self) -> bool:
        return self.config.activations[-1] in BOUNDED

    def predict_windows(self, windows) -> np.ndarray:
        """Forecasts (m/s) for lag windows given oldest value first."""
        w = np.asarray(windows, dtype=np.float64).reshape(-1, self.num_lags)
        out = forward(self.network, apply_scale(self.scaling, w))[:, 0]
        return invert_scale(self.scaling, out) if self.scales_targets else out

    def predict_targets(self, values, first_target: int) -> np.ndarray:
        """Forecast every index ``>= first_target`` of ``values`` from its lags."""
        sup = make_supervised(values, self.num_lags, self.horizon_steps)
        keep = sup.target_index >= first_target
        return self.predict_windows(sup.inputs[keep])


def _scaler_for(train_vals: np.ndarray, target_range) -> ScalingParams:
    try:
        return fit_scaler(train_vals, *target_range)
    except ConstantSeries:
        # unit-width source range centred on the constant value
        c = float(train_vals[0])
        return ScalingParams(c - 0.5, c + 0.5, *target_range)


def fit_mlp_forecaster(train, config: NetworkConfig, params: TrainParams, horizon_steps: int,
                       num_lags: int, trainer: str = "lm", trials: int = 1,
                       target_range=(0.1, 0.9)):
    """Scale, window and train; the best of ``trials`` seeded runs is kept.

    Trials are ranked by best validation MSE (training MSE when no
    validation split is used), ties broken by trial index.
    """
    if num_lags != config.input_size or config.output_size != 1:
        raise SizeMismatch("config must take num_lags inputs and produce one output")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    vals = _values_of(train)
    scaler = _scaler_for(vals, target_range)
    sup = make_supervised(vals, num_lags, horizon_steps)
    x = apply_scale(scaler, sup.inputs)
    bounded = config.activations[-1] in BOUNDED
    y = apply_scale(scaler, sup.targets) if bounded else sup.targets
    train_fn = get_trainer(trainer)
    best = None
    for t in range(trials):
        cfg = replace(config, seed=trial_seed(config.seed, t))
        net, report = train_fn(init_network(cfg), (x, y), params)
        score = report.best_validation_mse
        if score is None:
            score = report.final_train_mse
        if best is None or score < best[0]:
            best = (score, cfg, net, report)
    _, cfg, net, report = best
    return MlpForecaster(cfg, net, scaler, num_lags, horizon_steps, trainer), report


def fit_predict_pipeline(train, test, config: NetworkConfig, params: TrainParams,
                         horizon_steps: int, num_lags: int, trainer: str = "lm", trials: int = 1):
    """Train on ``train`` and forecast every point of ``test`` (m/s).

    Lag windows for the first test targets reach back into the training
    record, so the returned array has one prediction per test value.
    """
    model, report = fit_mlp_forecaster(train, config, params, horizon_steps, num_lags,
                                       trainer, trials)
    tr, te = _values_of(train), _values_of(test)
    full = np.concatenate((tr, te))
    if tr.size < num_lags + horizon_steps - 1:
        raise SizeMismatch("training record too short to seed the first test window")
    return model.predict_targets(full, tr.size), report


def reference_recipe(horizon_hours: int, num_lags: int = 2, seed: int = 0):
    """Reference network layout and trainer for the 3/6/12 h horizons.

    Each tuple lists one activation per computational layer, first hidden
    layer first.  Other horizons reuse the 3 h layout.
    """
    recipes = {
        3: ((3,), ("purelin", "logsig"), "lm"),
        6: ((5,), ("tansig", "purelin"), "lm"),
        12: ((3, 1), ("logsig", "logsig", "logsig"), "scg"),
    }
    hidden, acts, trainer = recipes.get(int(horizon_hours), recipes[3])
    return NetworkConfig(num_lags, hidden, 1, acts, seed), trainer
