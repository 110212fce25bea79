"""Self-organizing rough sets: SOM granules, SOM discretization, rough rules.

For each of a number of randomly sized SOM structures the training data are
replaced by their granule prototypes, every attribute is cut into ordered
levels by a 1-D SOM, rules are induced and filtered by strength, and the
rules classify the (identically discretized) test objects.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import rst
from .data import NUMERIC, SYMBOLIC, UNRECOGNIZED, Attribute, DecisionTable, mse_classification
from .errors import ConfigurationError, ShapeError
from .som import SomTopology, apply_levels, crisp_granulate, discretize_attribute, train_som
from .sonfis import grid_dims

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SorstConfig:
    levels_per_attribute: int | Mapping[str, int] = 3
    neuron_range: tuple[int, int] = (2, 63)
    structures: int = 7
    strength_threshold: float = 0.2
    threshold_decay: float | None = None
    exact_only: bool = True
    strategy: str = "minimal"
    universe: str = rst.WHOLE
    fallback_code: object = 4
    discretize_on: str = "granules"
    som_epochs: int = 50
    level_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.neuron_range
        object.__setattr__(self, "neuron_range", (int(lo), int(hi)))
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"bad neuron range {self.neuron_range}")
        if self.structures < 1:
            raise ConfigurationError("structures must be >= 1")
        if not 0 <= self.strength_threshold <= 1:
            raise ConfigurationError("strength_threshold must lie in [0, 1]")
        if self.threshold_decay is not None and not 0 < self.threshold_decay < 1:
            raise ConfigurationError("threshold_decay must lie in (0, 1)")
        if self.discretize_on not in ("granules", "raw"):
            raise ConfigurationError(f"discretize_on must be 'granules' or 'raw'")
        levels = self.levels_per_attribute
        if isinstance(levels, Mapping):
            if any(k < 1 for k in levels.values()):
                raise ConfigurationError("level counts must be >= 1")
        elif levels < 1:
            raise ConfigurationError("level count must be >= 1")

    def levels_for(self, name: str) -> int:
        levels = self.levels_per_attribute
        if isinstance(levels, Mapping):
            return int(levels.get(name, levels.get("*", 3)))
        return int(levels)


@dataclass(frozen=True, eq=False)
class StructureRecord:
    index: int
    neuron_count: int
    grid_dims: tuple[int, int]
    granule_count: int
    threshold: float
    rule_set: rst.RoughRuleSet
    rejected: bool
    test_mse: float
    predictions: tuple = field(default=(), repr=False)
    level_maps: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True, eq=False)
class SorstResult:
    records: tuple[StructureRecord, ...]
    best_index: int | None
    diagnostics: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return self.best_index is None

    @property
    def best(self) -> StructureRecord | None:
        return None if self.best_index is None else self.records[self.best_index]

    @property
    def level_maps(self) -> dict:
        return {} if self.best is None else self.best.level_maps


def discretize_table(table: DecisionTable, config: SorstConfig = SorstConfig(), seed: int | None = None):
    """Symbolic copy of a numeric table, one 1-D SOM per attribute.

    Returns the table and ``level_maps[name] = {level: prototype}``.
    """
    seed = config.seed if seed is None else seed
    columns, level_maps = [], {}
    for j, attr in enumerate(table.attributes):
        if attr.kind != NUMERIC:
            raise ShapeError(f"attribute {attr.name!r} is not numeric")
        levels, level_map = discretize_attribute(table.column(attr.name), config.levels_for(attr.name),
                                                 seed=seed + j, epochs=config.level_epochs)
        columns.append(levels)
        level_maps[attr.name] = level_map
    return _symbolic(table, columns), level_maps


def apply_level_maps(table: DecisionTable, level_maps: Mapping[str, Mapping]) -> DecisionTable:
    """Discretize with fixed level maps (no refitting)."""
    columns = [apply_levels(table.column(a.name), level_maps[a.name]) for a in table.attributes]
    return _symbolic(table, columns)


def _symbolic(table, columns):
    attrs = tuple(Attribute(a.name, a.role, SYMBOLIC) for a in table.attributes)
    rows = tuple(zip(*columns)) if columns else ()
    return DecisionTable(table.object_ids, attrs, rows)


def strength_filter(rules: rst.RoughRuleSet, threshold: float) -> rst.RoughRuleSet:
    if not 0 <= threshold <= 1:
        raise ConfigurationError("threshold must lie in [0, 1]")
    kept = tuple(r for r in rules.rules if r.dependency_factor >= threshold)
    return rst.RoughRuleSet(kept, rules.decision_name, rules.strategy, rules.fallback_code)


def run_sorst(train: DecisionTable, test: DecisionTable, config: SorstConfig = SorstConfig()) -> SorstResult:
    if train.decision_name is None:
        raise ConfigurationError("training table needs a decision attribute")
    if test.names != train.names:
        raise ShapeError("train and test schemas differ")
    names = train.names
    x_train = train.matrix(names)
    rng = np.random.default_rng(config.seed)
    lo, hi = config.neuron_range
    threshold = config.strength_threshold
    records, notes = [], []

    for s in range(config.structures):
        n = int(rng.integers(lo, hi + 1))
        dims = grid_dims(n)
        topo = SomTopology(dims=dims, epochs=config.som_epochs, seed=config.seed + 104729 * s)
        grid = train_som(x_train, topo, feature_names=names)
        granules = crisp_granulate(grid, train).prototypes_table
        fit_on = granules if config.discretize_on == "granules" else train
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, level_maps = discretize_table(fit_on, config, seed=config.seed + 31 * s)
        sym_train = apply_level_maps(granules, level_maps)
        sym_test = apply_level_maps(test, level_maps)

        rules = rst.induce_rules(sym_train, config.strategy, config.exact_only,
                                 strength_threshold=threshold, universe=config.universe,
                                 fallback_code=config.fallback_code)
        rules = strength_filter(rules, threshold)
        top = max((r.dependency_factor for r in rules.rules), default=0.0)
        if not rules.rules or top < threshold:
            notes.append(f"structure {s}: {n} neurons rejected, best df {top:.3f} < {threshold:.3f}")
            records.append(StructureRecord(s, n, dims, len(granules), threshold, rules, True,
                                           math.inf, (), level_maps))
            if config.threshold_decay is not None:
                threshold *= config.threshold_decay
            continue

        dj = sym_test.index(sym_test.decision_name)
        actual = [row[dj] for row in sym_test.rows]
        predicted = rst.classify_table(rules, sym_test)
        mse = mse_classification(predicted, actual) if actual else 0.0
        codes = tuple(config.fallback_code if p is UNRECOGNIZED else p for p in predicted)
        records.append(StructureRecord(s, n, dims, len(granules), threshold, rules, False,
                                       mse, codes, level_maps))

    live = [r for r in records if not r.rejected and math.isfinite(r.test_mse)]
    if not live:
        notes.append("every structure failed the strength checkpoint; reopen with a lower "
                     "threshold or a different neuron range")
        log.warning(notes[-1])
        return SorstResult(tuple(records), None, tuple(notes))
    best = min(live, key=lambda r: (r.test_mse, len(r.rule_set), r.granule_count, r.index))
    return SorstResult(tuple(records), records.index(best), tuple(notes))


def summary_rows(result: SorstResult) -> list[tuple]:
    return [(r.index, r.neuron_count, len(r.rule_set), int(r.rejected), r.test_mse)
            for r in result.records]


def dump_summary(result: SorstResult, delimiter: str = ",") -> str:
    lines = [delimiter.join(["structure", "neurons", "rules", "rejected", "mse"])]
    for row in summary_rows(result):
        lines.append(delimiter.join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"
