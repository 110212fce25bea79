"""Takagi-Sugeno-Kang fuzzy inference with Gaussian premises.

Rules are seeded by subtractive clustering (or, optionally, a grid of
membership functions), consequents are fit by least squares on normalized
firing strengths, and premises are tuned by gradient descent in a hybrid
loop.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ClusteringError, ConfigurationError, ShapeError

log = logging.getLogger(__name__)

FIRING_FLOOR = 1e-300
SIGMA_FLOOR = 1e-6  # relative to the feature range


@dataclass(frozen=True)
class GaussianMf:
    center: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError("Gaussian sigma must be positive")

    def __call__(self, x):
        return np.exp(-(np.asarray(x, dtype=float) - self.center) ** 2 / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class TskRule:
    premises: tuple[GaussianMf, ...]
    coefficients: tuple[float, ...]
    bias: float


@dataclass(frozen=True)
class SubtractiveConfig:
    radius: float = 0.5
    quash_factor: float = 1.25
    accept_ratio: float = 0.5
    reject_ratio: float = 0.15

    def __post_init__(self):
        if not 0 < self.radius <= 1:
            raise ConfigurationError("radius must lie in (0, 1]")
        if not self.quash_factor > 1:
            raise ConfigurationError("quash_factor must exceed 1")
        if not 0 < self.reject_ratio < self.accept_ratio <= 1:
            raise ConfigurationError("need 0 < reject_ratio < accept_ratio <= 1")


@dataclass(frozen=True, eq=False)
class TskModel:
    """Rule base as parallel arrays, one row per rule.

    ``singular`` marks a rank-deficient consequent fit (minimum-norm
    solution used); ``training_rmse`` holds the per-epoch history of the
    training run that produced the model, if any.
    """

    centers: np.ndarray
    sigmas: np.ndarray
    coefficients: np.ndarray
    biases: np.ndarray
    input_names: tuple[str, ...]
    singular: bool = False
    training_rmse: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        for name in ("centers", "sigmas", "coefficients"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        b = np.array(self.biases, dtype=float, ndmin=1)
        b.setflags(write=False)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "input_names", tuple(self.input_names))
        r, n = self.centers.shape
        if r == 0:
            raise ConfigurationError("a TSK model needs at least one rule")
        if self.sigmas.shape != (r, n) or self.coefficients.shape != (r, n) or b.shape != (r,):
            raise ShapeError("rule arrays disagree in shape")
        if len(self.input_names) != n:
            raise ShapeError("input_names does not match the input dimension")
        if np.any(self.sigmas <= 0):
            raise ConfigurationError("all sigmas must be positive")

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    @property
    def rules(self) -> list[TskRule]:
        return [TskRule(tuple(GaussianMf(float(c), float(s)) for c, s in zip(cs, ss)),
                        tuple(float(a) for a in coef), float(b))
                for cs, ss, coef, b in zip(self.centers, self.sigmas, self.coefficients, self.biases)]

    @classmethod
    def from_rules(cls, rules, input_names):
        rules = list(rules)
        return cls(np.array([[m.center for m in r.premises] for r in rules]),
                   np.array([[m.sigma for m in r.premises] for r in rules]),
                   np.array([r.coefficients for r in rules]),
                   np.array([r.bias for r in rules]), tuple(input_names))


# -- rule seeding ----------------------------------------------------------

def _unit_box(x):
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    span[span == 0] = 1.0
    return (x - lo) / span


def subtractive_cluster(data, config: SubtractiveConfig = SubtractiveConfig()) -> np.ndarray:
    """Potential-based cluster centers, returned as rows of `data`."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.size == 0:
        raise ClusteringError("cannot cluster empty data")
    z = _unit_box(x)
    d2 = ((z[:, None, :] - z[None, :, :]) ** 2).sum(-1)
    ra = config.radius
    rb = config.quash_factor * ra
    potential = np.exp(-(4.0 / ra ** 2) * d2).sum(axis=1)

    first = int(np.argmax(potential))
    p_first = potential[first]
    centers = [first]
    potential = potential - p_first * np.exp(-(4.0 / rb ** 2) * d2[first])
    while True:
        k = int(np.argmax(potential))
        p = potential[k]
        if p <= 0:
            break
        if p > config.accept_ratio * p_first:
            accept = True
        elif p < config.reject_ratio * p_first:
            break
        else:
            dmin = math.sqrt(min(d2[k, c] for c in centers))
            accept = dmin / ra + p / p_first >= 1.0
        if accept:
            centers.append(k)
            potential = potential - p * np.exp(-(4.0 / rb ** 2) * d2[k])
        else:
            potential[k] = 0.0
    return x[centers].copy()


def grid_centers(data, mfs_per_input) -> np.ndarray:
    """All combinations of evenly spaced centers: the grid rule seeding."""
    x = np.asarray(data, dtype=float)
    lo, hi = x.min(axis=0), x.max(axis=0)
    if np.isscalar(mfs_per_input):
        mfs_per_input = [int(mfs_per_input)] * x.shape[1]
    axes = [np.linspace(a, b, m) if m > 1 else np.array([(a + b) / 2])
            for a, b, m in zip(lo, hi, mfs_per_input)]
    return np.array(list(itertools.product(*axes)), dtype=float)


# -- core evaluation ---------------------------------------------------------

def _sigma_floor(x):
    span = x.max(axis=0) - x.min(axis=0)
    span[span == 0] = 1.0
    return SIGMA_FLOOR * span


def firing_strengths(model: TskModel, x) -> np.ndarray:
    x = _inputs(model, x)
    diff = (x[:, None, :] - model.centers[None, :, :]) / model.sigmas[None, :, :]
    return np.exp(-0.5 * (diff ** 2).sum(-1))


def normalized_strengths(model: TskModel, x):
    """Normalized firing strengths and a mask of rows where every rule fell below the floor."""
    w = firing_strengths(model, x)
    total = w.sum(axis=1)
    dead = w.max(axis=1) < FIRING_FLOOR
    wbar = np.zeros_like(w)
    live = ~dead
    wbar[live] = w[live] / total[live, None]
    if dead.any():
        x = _inputs(model, x)
        nearest = np.argmin(((x[dead, None, :] - model.centers[None]) ** 2).sum(-1), axis=1)
        wbar[np.flatnonzero(dead), nearest] = 1.0
    return wbar, dead


def _inputs(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.n_inputs:
        raise ShapeError(f"model takes {model.n_inputs} inputs, got {x.shape[1]}")
    return x


def evaluate(model: TskModel, x):
    """Outputs for each row of `x` and the mask of rows that used the nearest-rule fallback."""
    x = _inputs(model, x)
    wbar, dead = normalized_strengths(model, x)
    local = x @ model.coefficients.T + model.biases
    if dead.any():
        log.debug("%d inputs fired no rule; nearest-center fallback used", int(dead.sum()))
    return (wbar * local).sum(axis=1), dead


def predict(model: TskModel, x) -> np.ndarray:
    return evaluate(model, x)[0]


def infer(model: TskModel, vector) -> float:
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1:
        raise ShapeError("infer takes a single input vector")
    return float(evaluate(model, v)[0][0])


# -- fitting -----------------------------------------------------------------

def _design(wbar, x):
    n, r = wbar.shape
    cols = np.concatenate([wbar[:, :, None] * x[:, None, :], wbar[:, :, None]], axis=2)
    return cols.reshape(n, -1)


def fit_consequents(model: TskModel, x, y) -> TskModel:
    """Least-squares consequents for fixed premises."""
    x = _inputs(model, x)
    y = np.asarray(y, dtype=float).ravel()
    wbar, _ = normalized_strengths(model, x)
    a = _design(wbar, x)
    theta, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    singular = rank < a.shape[1]
    theta = theta.reshape(model.n_rules, model.n_inputs + 1)
    return replace(model, coefficients=theta[:, :-1], biases=theta[:, -1], singular=singular)


def build_tsk_model(centers, x, y, radius: float = 0.5, input_names=None) -> TskModel:
    """One rule per center; widths from the clustering radius."""
    c = np.asarray(centers, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if c.ndim == 1:
        c = c[None, :]
    if c.shape[0] < 1:
        raise ConfigurationError("need at least one center")
    if x.shape[0] == 0:
        raise ConfigurationError("need training data")
    if c.shape[1] != x.shape[1]:
        raise ShapeError("centers and data disagree in dimension")
    span = x.max(axis=0) - x.min(axis=0)
    span[span == 0] = 1.0
    sigma = np.maximum(radius * span / math.sqrt(8.0), _sigma_floor(x))
    names = input_names or tuple(f"x{j}" for j in range(x.shape[1]))
    model = TskModel(c, np.tile(sigma, (c.shape[0], 1)), np.zeros_like(c),
                     np.zeros(c.shape[0]), names)
    return fit_consequents(model, x, y)


def build_grid_model(x, y, mfs_per_input, input_names=None) -> TskModel:
    """Grid-seeded model: one rule per combination of evenly spaced MFs."""
    x = np.asarray(x, dtype=float)
    centers = grid_centers(x, mfs_per_input)
    m = np.broadcast_to(np.asarray(mfs_per_input), (x.shape[1],))
    span = x.max(axis=0) - x.min(axis=0)
    span[span == 0] = 1.0
    sigma = np.maximum(span / (2.0 * np.maximum(m - 1, 1)), _sigma_floor(x))
    names = input_names or tuple(f"x{j}" for j in range(x.shape[1]))
    model = TskModel(centers, np.tile(sigma, (len(centers), 1)), np.zeros_like(centers),
                     np.zeros(len(centers)), names)
    return fit_consequents(model, x, y)


def premise_gradients(model: TskModel, x, y):
    """Gradients of 0.5 * mean squared error with respect to centers and sigmas."""
    x = _inputs(model, x)
    y = np.asarray(y, dtype=float).ravel()
    wbar, dead = normalized_strengths(model, x)
    local = x @ model.coefficients.T + model.biases
    f = (wbar * local).sum(axis=1)
    err = f - y
    # fallback rows carry no premise gradient
    err = np.where(dead, 0.0, err)
    # dE/dw_r * w_r = err * wbar_r * (g_r - f)
    g = (err[:, None] * wbar * (local - f[:, None])) / len(y)
    diff = x[:, None, :] - model.centers[None, :, :]
    s = model.sigmas[None, :, :]
    d_centers = (g[:, :, None] * diff / s ** 2).sum(axis=0)
    d_sigmas = (g[:, :, None] * diff ** 2 / s ** 3).sum(axis=0)
    return d_centers, d_sigmas


def training_rmse(model, x, y) -> float:
    return float(np.sqrt(np.mean((predict(model, x) - np.asarray(y, dtype=float).ravel()) ** 2)))


def train_tsk(model: TskModel, x, y, epochs: int = 100, step: float = 0.01) -> TskModel:
    """Hybrid training; returns the best model seen (by training RMSE).

    Each epoch refits the consequents by least squares, records the RMSE of
    that model, then moves premises along the scaled negative gradient. The
    step is a relative length: centers and sigmas move by at most
    ``step * sigma``. It halves whenever the error goes up.
    """
    if epochs < 0:
        raise ConfigurationError("epochs must be >= 0")
    x = _inputs(model, x)
    y = np.asarray(y, dtype=float).ravel()
    if epochs == 0:
        return model
    floor = _sigma_floor(x)
    best = model
    best_err = training_rmse(model, x, y)
    history = [best_err]
    current = model
    prev_err = best_err
    for _ in range(epochs):
        current = fit_consequents(current, x, y)
        err = training_rmse(current, x, y)
        history.append(err)
        if err < best_err:
            best, best_err = current, err
        if err > prev_err:
            step *= 0.5
        prev_err = err
        dc, ds = premise_gradients(current, x, y)
        sig = current.sigmas
        gc, gs = dc * sig, ds * sig
        if not (np.all(np.isfinite(gc)) and np.all(np.isfinite(gs))):
            log.warning("non-finite premise gradient; clamping sigmas to floor")
            current = replace(current, sigmas=np.maximum(sig, floor))
            continue
        norm = math.sqrt(float((gc ** 2).sum() + (gs ** 2).sum()))
        if norm == 0:
            continue
        centers = current.centers - step * sig * gc / norm
        sigmas = sig - step * sig * gs / norm
        if np.any(sigmas < floor):
            log.info("sigma hit floor during training")
        current = replace(current, centers=centers, sigmas=np.maximum(sigmas, floor))
    return replace(best, training_rmse=tuple(history))


# -- export ------------------------------------------------------------------

def model_to_dict(model: TskModel) -> dict:
    return {
        "kind": "tsk-model",
        "inputs": list(model.input_names),
        "rules": [
            {"premises": [[float(c), float(s)] for c, s in zip(cs, ss)],
             "coefficients": [float(a) for a in coef],
             "bias": float(b)}
            for cs, ss, coef, b in zip(model.centers, model.sigmas, model.coefficients, model.biases)
        ],
        "singular": bool(model.singular),
    }


def model_from_dict(d: dict) -> TskModel:
    if d.get("kind") != "tsk-model":
        raise ShapeError("not a tsk-model document")
    rules = d["rules"]
    return TskModel(np.array([[p[0] for p in r["premises"]] for r in rules]),
                    np.array([[p[1] for p in r["premises"]] for r in rules]),
                    np.array([r["coefficients"] for r in rules]),
                    np.array([r["bias"] for r in rules]),
                    tuple(d["inputs"]), bool(d.get("singular", False)))


def dump_model(model: TskModel) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def load_model(text: str) -> TskModel:
    return model_from_dict(json.loads(text))
