"""Self-organizing neuro-fuzzy inference: SOM crisp granules feeding a TSK model.

Each close-open iteration trains a SOM at the current neuron count on the
training data (close), fits a TSK model on the granule prototypes, and
scores it on the untouched test data (open). The neuron count then moves
either by a seeded uniform draw (random growth) or by the linear law
``N <- alpha*N + beta*E + gamma`` (adaptive growth).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import nfis
from .data import DecisionTable, rmse
from .errors import ConfigurationError, GranulationError, ShapeError
from .som import SomGrid, SomTopology, crisp_granulate, train_som

log = logging.getLogger(__name__)

CRITERIA = ("min_error", "min_rules", "min_objects")


@dataclass(frozen=True)
class SonfisConfig:
    neuron_range: tuple[int, int] = (2, 63)
    max_rules: int = 4
    iterations: int = 10
    mode: str = "random"
    alpha: float = 1.01
    beta: float = 0.001
    gamma: float = 0.5
    initial_neurons: int | None = None
    error_target: float | None = None
    criterion: str = "min_error"
    som_epochs: int = 50
    nfis_epochs: int = 100
    nfis_step: float = 0.01
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.neuron_range
        object.__setattr__(self, "neuron_range", (int(lo), int(hi)))
        if lo < 2 or hi < lo:
            raise ConfigurationError(f"bad neuron range {self.neuron_range}")
        if self.max_rules < 1:
            raise ConfigurationError("max_rules must be >= 1")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.mode not in ("random", "adaptive"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "adaptive" and not self.alpha > 0:
            raise ConfigurationError("adaptive mode needs alpha > 0")
        if self.criterion not in CRITERIA:
            raise ConfigurationError(f"unknown criterion {self.criterion!r}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    neuron_count: int
    grid_dims: tuple[int, int]
    rule_count: int
    test_error: float
    granule_count: int
    failed: bool = False

    def __post_init__(self):
        if self.grid_dims[0] * self.grid_dims[1] != self.neuron_count:
            raise ShapeError("grid dims do not multiply to the neuron count")
        if self.test_error < 0:
            raise ConfigurationError("test error must be non-negative")


@dataclass(frozen=True)
class GranulationTrace:
    records: tuple[IterationRecord, ...]
    best_index: int
    selection_criterion: str = "min_error"

    @property
    def best(self) -> IterationRecord:
        return self.records[self.best_index]


@dataclass(frozen=True, eq=False)
class SonfisResult:
    trace: GranulationTrace
    best_model: nfis.TskModel
    best_grid: SomGrid
    radius: float = field(default=0.5)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def next_neuron_count(n: int, error: float, alpha: float, beta: float, gamma: float,
                      neuron_range: tuple[int, int] | None = None) -> int:
    value = round_half_up(alpha * n + beta * error + gamma)
    if neuron_range is not None:
        lo, hi = neuron_range
        clamped = min(max(value, lo), hi)
        if clamped != value:
            log.debug("neuron count %d clamped to %d", value, clamped)
        value = clamped
    return value


def neuron_trajectory(n0: float, errors: Sequence[float], alpha: float, beta: float,
                      gamma: float) -> list[float]:
    """Unrounded, unclamped iterates of the growth law, starting with n0."""
    out = [float(n0)]
    for e in errors:
        out.append(alpha * out[-1] + beta * e + gamma)
    return out


def grid_dims(n: int) -> tuple[int, int]:
    """Most nearly square factorization n1 <= n2, or (1, n) when that is still lopsided."""
    if n < 1:
        raise ConfigurationError("neuron count must be >= 1")
    best = (1, n)
    for a in range(1, math.isqrt(n) + 1):
        if n % a == 0:
            best = (a, n // a)
    if best[1] - best[0] > math.sqrt(n):
        return (1, n)
    return best


def rules_for_target(x, target: int, max_rules: int, tries: int = 40):
    """Subtractive-clustering radius whose center count is closest to target.

    The center count falls as the radius grows, so the radius is bisected
    on (0, 1]. If no radius reaches max_rules, the highest-potential
    centers are kept.
    """
    lo, hi = 1e-3, 1.0
    seen = {}
    for _ in range(tries):
        mid = 0.5 * (lo + hi)
        count = len(nfis.subtractive_cluster(x, nfis.SubtractiveConfig(radius=mid)))
        seen.setdefault(count, mid)
        if count == target:
            break
        if count > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    if 1.0 not in seen.values():
        count = len(nfis.subtractive_cluster(x, nfis.SubtractiveConfig(radius=1.0)))
        seen.setdefault(count, 1.0)
    allowed = [c for c in seen if c <= max_rules] or list(seen)
    count = min(allowed, key=lambda c: (abs(c - target), c))
    radius = seen[count]
    centers = nfis.subtractive_cluster(x, nfis.SubtractiveConfig(radius=radius))
    # centers come out in order of potential; keep the strongest
    return centers[:max_rules], radius


def _selection_key(criterion):
    if criterion == "min_error":
        return lambda r: (r.test_error, r.rule_count, r.granule_count, r.t)
    if criterion == "min_rules":
        return lambda r: (r.rule_count, r.test_error, r.granule_count, r.t)
    return lambda r: (r.granule_count, r.test_error, r.rule_count, r.t)


def select_best(records: Sequence[IterationRecord], criterion: str = "min_error") -> int:
    """Index of the best record; failed records only win if everything failed.

    Ties fall to fewer rules, then fewer granules, then the earlier iteration.
    """
    key = _selection_key(criterion)
    pool = [r for r in records if not r.failed and math.isfinite(r.test_error)] or list(records)
    best = min(pool, key=key)
    return records.index(best)


def run_sonfis(train: DecisionTable, test: DecisionTable, config: SonfisConfig = SonfisConfig()) -> SonfisResult:
    inputs = train.condition_names
    target = train.decision_name
    if target is None:
        raise ConfigurationError("training table needs a decision attribute")
    if test.names != train.names:
        raise ShapeError("train and test schemas differ")
    features = inputs + (target,)
    x_train = train.matrix(features)
    x_test = test.matrix(inputs)
    y_test = np.asarray(test.matrix([target])[:, 0])

    rng = np.random.default_rng(config.seed)
    lo, hi = config.neuron_range
    if config.mode == "adaptive" and config.initial_neurons is not None:
        n = min(max(int(config.initial_neurons), lo), hi)
    else:
        n = int(rng.integers(lo, hi + 1))

    records, models = [], []
    last_error = 0.0
    for t in range(config.iterations):
        dims = grid_dims(n)
        topo = SomTopology(dims=dims, epochs=config.som_epochs, seed=config.seed + 7919 * t)
        grid = train_som(x_train, topo, feature_names=features)
        granules = crisp_granulate(grid, train).prototypes_table
        gx = granules.matrix(inputs)
        gy = granules.matrix([target])[:, 0]
        try:
            centers, radius = rules_for_target(gx, min(config.max_rules, len(granules)),
                                               config.max_rules)
            model = nfis.build_tsk_model(centers, gx, gy, radius, inputs)
            model = nfis.train_tsk(model, gx, gy, config.nfis_epochs, config.nfis_step)
            error = rmse(nfis.predict(model, x_test), y_test) if len(test) else 0.0
            if not math.isfinite(error):
                raise GranulationError("non-finite test error")
            rec = IterationRecord(t, n, dims, model.n_rules, error, len(granules))
        except (GranulationError, np.linalg.LinAlgError) as exc:
            log.warning("iteration %d failed: %s", t, exc)
            model, radius = None, float("nan")
            rec = IterationRecord(t, n, dims, 0, math.inf, len(granules), failed=True)
        records.append(rec)
        models.append((model, grid, radius))
        if math.isfinite(rec.test_error):
            last_error = rec.test_error
        if config.error_target is not None and rec.test_error <= config.error_target:
            break
        if config.mode == "random":
            n = int(rng.integers(lo, hi + 1))
        else:
            n = next_neuron_count(n, last_error, config.alpha, config.beta, config.gamma,
                                  config.neuron_range)

    best = select_best(records, config.criterion)
    trace = GranulationTrace(tuple(records), best, config.criterion)
    model, grid, radius = models[best]
    if model is None:
        raise GranulationError("every close-open iteration failed")
    return SonfisResult(trace, model, grid, radius)


# -- balance measures -----------------------------------------------------------

def _counts(trace):
    if isinstance(trace, GranulationTrace):
        return [r.neuron_count for r in trace.records]
    return [int(c) for c in trace]


def neuron_durability(trace, tolerance: float = 0) -> dict[int, int]:
    """Longest run of consecutive iterations staying within +-tolerance of each visited count.

    Visited counts within tolerance of an earlier-listed count are folded
    into that count rather than reported separately.
    """
    counts = _counts(trace)
    if not counts:
        raise ValueError("durability of an empty trace")
    keys = []
    for c in counts:
        if not any(abs(c - k) <= tolerance for k in keys):
            keys.append(c)
    out = {}
    for k in keys:
        best = run = 0
        for c in counts:
            run = run + 1 if abs(c - k) <= tolerance else 0
            best = max(best, run)
        out[k] = best
    return out


def detect_balance_hole(trace, window: int, neuron_tol: float, error_tol: float):
    """Earliest window where counts and errors each stay inside a band of the given half-width.

    Returns the window's (mean neuron count, mean error), or None.
    """
    if isinstance(trace, GranulationTrace):
        counts = np.array([r.neuron_count for r in trace.records], dtype=float)
        errors = np.array([r.test_error for r in trace.records], dtype=float)
    else:
        counts = np.array([p[0] for p in trace], dtype=float)
        errors = np.array([p[1] for p in trace], dtype=float)
    if window < 1 or window > len(counts):
        raise ValueError("window must be between 1 and the trace length")
    for s in range(len(counts) - window + 1):
        c, e = counts[s:s + window], errors[s:s + window]
        if not np.all(np.isfinite(e)):
            continue
        if c.max() - c.min() <= 2 * neuron_tol and e.max() - e.min() <= 2 * error_tol:
            return float(c.mean()), float(e.mean())
    return None


def trace_rows(trace: GranulationTrace) -> list[tuple]:
    return [(r.t, r.neuron_count, r.grid_dims[0], r.grid_dims[1], r.rule_count, r.test_error)
            for r in trace.records]


def dump_trace(trace: GranulationTrace, delimiter: str = ",") -> str:
    lines = [delimiter.join(["t", "neurons", "n1", "n2", "rules", "rmse"])]
    for row in trace_rows(trace):
        lines.append(delimiter.join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"
