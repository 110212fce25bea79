"""Prediction lattices over spatial coordinates and their divergence field."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import nfis, rst
from .data import UNRECOGNIZED
from .errors import ConfigurationError, ShapeError
from .som import apply_levels

UNKNOWN_CLASS = 6


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError(f"axis {self.name!r}: step must be positive")
        if self.stop < self.start:
            raise ConfigurationError(f"axis {self.name!r}: stop below start")

    @property
    def values(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)

    @classmethod
    def parse(cls, spec: str) -> "Axis":
        """``name:start:stop:step``"""
        parts = spec.split(":")
        if len(parts) != 4:
            raise ConfigurationError(f"axis spec {spec!r} is not name:start:stop:step")
        return cls(parts[0], float(parts[1]), float(parts[2]), float(parts[3]))


@dataclass(frozen=True, eq=False)
class PredictionLattice:
    axes: tuple[Axis, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise ShapeError("a lattice has one to three axes")
        shape = self.shape
        vals = np.asarray(self.values, dtype=float).reshape(shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a.values) for a in self.axes)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def nodes(self) -> np.ndarray:
        """Node coordinates in C order (last axis fastest)."""
        grids = np.meshgrid(*[a.values for a in self.axes], indexing="ij")
        return np.column_stack([g.ravel() for g in grids])


def lattice_nodes(axes: Sequence[Axis]) -> np.ndarray:
    grids = np.meshgrid(*[a.values for a in axes], indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def predict_tsk_lattice(model: nfis.TskModel, axes: Sequence[Axis]) -> PredictionLattice:
    if model.n_inputs != len(axes):
        raise ShapeError(f"model has {model.n_inputs} inputs but the lattice has {len(axes)} axes")
    nodes = lattice_nodes(axes)
    return PredictionLattice(tuple(axes), nfis.predict(model, nodes))


def predict_rough_lattice(rules: rst.RoughRuleSet, level_maps: Mapping[str, Mapping],
                          axes: Sequence[Axis], unknown_class=UNKNOWN_CLASS) -> PredictionLattice:
    """Symbolic class per node; nodes no rule recognizes get `unknown_class`.

    Axis names must be the rule set's condition attributes; coordinates are
    turned into levels with the given level maps.
    """
    names = [a.name for a in axes]
    used = {a for r in rules.rules for a in r.attributes}
    missing = used - set(names)
    if missing:
        raise ShapeError(f"rules use attributes not on the lattice: {sorted(missing)}")
    for n in names:
        if n not in level_maps:
            raise ShapeError(f"no level map for axis {n!r}")
    nodes = lattice_nodes(axes)
    levels = [apply_levels(nodes[:, j], level_maps[n]) for j, n in enumerate(names)]
    ordered = rst.ordered_rules(rules)
    out = np.empty(len(nodes))
    for i, combo in enumerate(zip(*levels)):
        obj = dict(zip(names, combo))
        value = UNRECOGNIZED
        for rule in ordered:
            if rule.matches(obj):
                value = min(rule.decisions, key=rst._sort_key)
                break
        out[i] = unknown_class if value is UNRECOGNIZED else float(value)
    return PredictionLattice(tuple(axes), out)


def divergence(lattice: PredictionLattice) -> PredictionLattice:
    """Divergence of the gradient of the field: sum of second differences.

    Interior nodes use the three-point central stencil; a boundary node
    takes the stencil of its inner neighbor. Axes with one node are
    inactive; an active axis needs at least three nodes.
    """
    f = np.asarray(lattice.values, dtype=float)
    out = np.zeros_like(f)
    for k, axis in enumerate(lattice.axes):
        n = f.shape[k]
        if n == 1:
            continue
        if n < 3:
            raise ShapeError(f"axis {axis.name!r} has {n} nodes; at least 3 are needed")
        g = np.moveaxis(f, k, 0)
        d2 = np.empty_like(g)
        d2[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / axis.step ** 2
        d2[0] = d2[1]
        d2[-1] = d2[-2]
        out += np.moveaxis(d2, 0, k)
    return PredictionLattice(lattice.axes, out)


def interior_mask(lattice: PredictionLattice) -> np.ndarray:
    mask = np.ones(lattice.shape, dtype=bool)
    for k, n in enumerate(lattice.shape):
        if n == 1:
            continue
        idx = [slice(None)] * len(lattice.shape)
        idx[k] = 0
        mask[tuple(idx)] = False
        idx[k] = n - 1
        mask[tuple(idx)] = False
    return mask


def dump_lattice(lattice: PredictionLattice, value_name: str = "value", delimiter: str = ",") -> str:
    header = [a.name for a in lattice.axes] + [value_name]
    lines = [delimiter.join(header)]
    for node, v in zip(lattice.nodes(), lattice.values.ravel()):
        lines.append(delimiter.join(repr(float(c)) for c in node) + delimiter + repr(float(v)))
    return "\n".join(lines) + "\n"


def load_lattice(text: str, delimiter: str = ","):
    """Rebuild a lattice from its delimiter-separated dump; returns (lattice, value_name)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ShapeError("lattice file has no nodes")
    header = [h.strip() for h in lines[0].split(delimiter)]
    data = np.array([[float(c) for c in ln.split(delimiter)] for ln in lines[1:]])
    if data.shape[1] != len(header):
        raise ShapeError("lattice rows disagree with the header")
    axes = []
    for j, name in enumerate(header[:-1]):
        coords = np.unique(data[:, j])
        if len(coords) == 1:
            step = 1.0
        else:
            steps = np.diff(coords)
            step = float(steps[0])
            if not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
                raise ShapeError(f"axis {name!r} is not evenly spaced")
        axes.append(Axis(name, float(coords[0]), float(coords[-1]), step))
    lat_nodes = lattice_nodes(axes)
    if lat_nodes.shape[0] != data.shape[0]:
        raise ShapeError("node count is not the product of the axis counts")
    if not np.allclose(lat_nodes, data[:, :-1], rtol=1e-9, atol=1e-9):
        raise ShapeError("lattice rows are not in axis order")
    return PredictionLattice(tuple(axes), data[:, -1]), header[-1]

