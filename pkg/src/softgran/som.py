"""Kohonen self-organizing map: crisp granulation and 1-D discretization.

Training runs on min-max normalized features; prototypes are stored in the
original units together with the normalization, and every distance
(best-matching unit, quantization error) is measured in normalized units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DecisionTable
from .errors import ConfigurationError, MeasureError, ShapeError, TrainingError


@dataclass(frozen=True)
class SomTopology:
    dims: tuple[int, int] = (7, 9)
    neighborhood: str = "gaussian"
    initial_radius: float | None = None
    epochs: int = 500
    lr_initial: float = 0.5
    lr_final: float = 0.01
    seed: int = 0

    def __post_init__(self):
        n1, n2 = self.dims
        object.__setattr__(self, "dims", (int(n1), int(n2)))
        if n1 < 1 or n2 < 1:
            raise ConfigurationError(f"grid dims must be positive, got {self.dims}")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if not self.lr_initial >= self.lr_final > 0:
            raise ConfigurationError("need lr_initial >= lr_final > 0")
        if self.neighborhood not in ("gaussian", "bubble"):
            raise ConfigurationError(f"unknown neighborhood {self.neighborhood!r}")

    @property
    def n_neurons(self) -> int:
        return self.dims[0] * self.dims[1]

    @property
    def radius0(self) -> float:
        if self.initial_radius is not None:
            return float(self.initial_radius)
        return max(1.0, max(self.dims) / 2.0)


@dataclass(frozen=True, eq=False)
class SomGrid:
    topology: SomTopology
    prototypes: np.ndarray
    feature_names: tuple[str, ...]
    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        for name in ("prototypes", "offset", "scale"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.prototypes.shape != (self.topology.n_neurons, len(self.feature_names)):
            raise ShapeError(f"prototype matrix {self.prototypes.shape} does not fit "
                             f"{self.topology.dims} x {len(self.feature_names)} features")
        if not np.all(np.isfinite(self.prototypes)):
            raise TrainingError("non-finite prototype entries")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def normalize(self, data) -> np.ndarray:
        return (np.asarray(data, dtype=float) - self.offset) / self.scale


@dataclass(frozen=True, eq=False)
class GranuleSet:
    prototypes_table: DecisionTable
    assignment: dict = field(repr=False)
    occupancy: dict


def lattice_coords(dims) -> np.ndarray:
    n1, n2 = dims
    k = np.arange(n1 * n2)
    return np.column_stack([k // n2, k % n2]).astype(float)


def _normalization(data):
    lo = data.min(axis=0)
    span = data.max(axis=0) - lo
    span[span == 0] = 1.0
    return lo, span


def _as_matrix(data):
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise TrainingError("SOM training needs a nonempty 2-D feature matrix")
    if not np.all(np.isfinite(x)):
        raise TrainingError("SOM training data contain non-finite values")
    return x


def initialize_som(data, topology: SomTopology, feature_names=None) -> SomGrid:
    """Untrained grid: prototypes drawn uniformly from the data's bounding box."""
    x = _as_matrix(data)
    lo, span = _normalization(x)
    rng = np.random.default_rng(topology.seed)
    raw_span = x.max(axis=0) - x.min(axis=0)
    protos = lo + rng.random((topology.n_neurons, x.shape[1])) * raw_span
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(x.shape[1])]
    if len(feature_names) != x.shape[1]:
        raise ShapeError("feature_names length does not match data")
    return SomGrid(topology, protos, tuple(feature_names), lo, span)


def train_som(data, topology: SomTopology, feature_names=None, init: SomGrid | None = None) -> SomGrid:
    """Online winner-take-all training with a shrinking lattice neighborhood.

    Learning rate decays linearly from lr_initial to lr_final, and the
    neighborhood radius linearly from the initial radius to 1, over all
    presentation steps. Each epoch presents the data in a seeded random order.
    """
    x = _as_matrix(data)
    grid = init if init is not None else initialize_som(x, topology, feature_names)
    if grid.n_features != x.shape[1]:
        raise ShapeError("initial grid and data disagree on feature count")
    z = grid.normalize(x)
    w = np.array(grid.normalize(grid.prototypes))
    coords = lattice_coords(topology.dims)
    lat_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)

    rng = np.random.default_rng([topology.seed, 1])
    n = z.shape[0]
    total = topology.epochs * n
    r0 = topology.radius0
    r1 = min(1.0, r0)
    gaussian = topology.neighborhood == "gaussian"
    step = 0
    for _ in range(topology.epochs):
        for i in rng.permutation(n):
            frac = step / (total - 1) if total > 1 else 1.0
            lr = topology.lr_initial + (topology.lr_final - topology.lr_initial) * frac
            radius = r0 + (r1 - r0) * frac
            v = z[i]
            winner = int(np.argmin(((w - v) ** 2).sum(axis=1)))
            d2 = lat_d2[winner]
            if gaussian:
                # the radius is the ~3-sigma extent of the kernel
                sigma = radius / 3.0
                h = np.exp(-d2 / (2.0 * sigma * sigma))
            else:
                h = (d2 <= radius * radius).astype(float)
            w += (lr * h)[:, None] * (v - w)
            step += 1
    protos = w * grid.scale + grid.offset
    return SomGrid(topology, protos, grid.feature_names, grid.offset, grid.scale)


def _check_vectors(grid, data):
    x = np.asarray(data, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != grid.n_features:
        raise ShapeError(f"expected {grid.n_features} features, got {x.shape[1]}")
    return x, single


def bmu_indices(grid: SomGrid, data) -> np.ndarray:
    """Winner for each row; ties go to the lowest neuron index."""
    x, _ = _check_vectors(grid, data)
    z = grid.normalize(x)
    w = grid.normalize(grid.prototypes)
    d2 = ((z[:, None, :] - w[None, :, :]) ** 2).sum(-1)
    return np.argmin(d2, axis=1)


def best_matching_unit(grid: SomGrid, vector) -> int:
    x = np.asarray(vector, dtype=float)
    if x.ndim != 1:
        raise ShapeError("best_matching_unit takes a single vector")
    return int(bmu_indices(grid, x)[0])


def quantization_error(grid: SomGrid, data) -> float:
    """Mean normalized distance from each datum to its winning prototype."""
    x, _ = _check_vectors(grid, data)
    if x.shape[0] == 0:
        raise MeasureError("quantization error of empty data")
    z = grid.normalize(x)
    w = grid.normalize(grid.prototypes)
    d2 = ((z[:, None, :] - w[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.min(axis=1)).mean())


def crisp_granulate(grid: SomGrid, table: DecisionTable) -> GranuleSet:
    """Replace the objects by the prototypes of the neurons they occupy.

    The prototype table keeps the source table's attribute schema restricted
    to the grid's features; its objects are the occupied neurons, in index
    order, with ids ``"n<index>"``.
    """
    try:
        attrs = tuple(table.attribute(n) for n in grid.feature_names)
    except KeyError as exc:
        raise ShapeError(f"table lacks grid feature: {exc}") from None
    x = table.matrix(grid.feature_names)
    winners = bmu_indices(grid, x)
    assignment = {oid: int(k) for oid, k in zip(table.object_ids, winners)}
    counts = np.bincount(winners, minlength=grid.topology.n_neurons)
    occupied = [k for k in range(len(counts)) if counts[k] > 0]
    rows = tuple(tuple(float(v) for v in grid.prototypes[k]) for k in occupied)
    ptable = DecisionTable(tuple(f"n{k}" for k in occupied), attrs, rows)
    return GranuleSet(ptable, assignment, {k: int(counts[k]) for k in occupied})


def discretize_attribute(values, k: int, seed: int = 0, epochs: int = 100):
    """Split a scalar attribute into ordered levels with a k-neuron 1-D SOM.

    Returns ``(levels, level_map)``: levels are ints 1..k' numbered by
    ascending prototype value, and ``level_map[level]`` is that prototype.
    Coinciding prototypes collapse into one level, so k' may be below k.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise TrainingError("cannot discretize an empty attribute")
    if k < 1:
        raise ConfigurationError("level count must be >= 1")
    distinct = np.unique(v).size
    if k > distinct:
        warnings.warn(f"{k} levels requested for {distinct} distinct values; "
                      "levels will collapse", RuntimeWarning, stacklevel=2)
    topo = SomTopology(dims=(k, 1), epochs=epochs, lr_initial=0.5, lr_final=0.01,
                       initial_radius=max(1.0, k / 2.0), seed=seed)
    grid = train_som(v[:, None], topo)
    level_map = _level_map(grid.prototypes[:, 0])
    return apply_levels(v, level_map), level_map


def _level_map(protos):
    ordered = np.unique(protos)
    return {i + 1: float(p) for i, p in enumerate(ordered)}


def apply_levels(values, level_map) -> tuple[int, ...]:
    """Level of each value: its nearest level prototype, ties to the lower level."""
    levels = sorted(level_map)
    centers = np.array([level_map[lv] for lv in levels], dtype=float)
    v = np.asarray(values, dtype=float).ravel()
    idx = np.argmin(np.abs(v[:, None] - centers[None, :]), axis=1)
    return tuple(levels[i] for i in idx)


# -- text export ---------------------------------------------------------

def dump_grid(grid: SomGrid) -> str:
    t = grid.topology
    lines = [
        "som-grid 1",
        f"dims {t.dims[0]} {t.dims[1]}",
        f"neighborhood {t.neighborhood}",
        f"initial_radius {repr(t.radius0)}",
        f"epochs {t.epochs}",
        f"lr {repr(t.lr_initial)} {repr(t.lr_final)}",
        f"seed {t.seed}",
        "features " + " ".join(grid.feature_names),
        "offset " + " ".join(repr(float(v)) for v in grid.offset),
        "scale " + " ".join(repr(float(v)) for v in grid.scale),
        "prototypes",
    ]
    lines += [" ".join(repr(float(v)) for v in row) for row in grid.prototypes]
    return "\n".join(lines) + "\n"


def load_grid(text: str) -> SomGrid:
    lines = text.splitlines()
    if not lines or lines[0].split() != ["som-grid", "1"]:
        raise ShapeError("not a som-grid file")
    head = {}
    i = 1
    while i < len(lines) and lines[i] != "prototypes":
        key, _, rest = lines[i].partition(" ")
        head[key] = rest.split()
        i += 1
    n1, n2 = (int(v) for v in head["dims"])
    lr0, lr1 = (float(v) for v in head["lr"])
    topo = SomTopology((n1, n2), head["neighborhood"][0], float(head["initial_radius"][0]),
                       int(head["epochs"][0]), lr0, lr1, int(head["seed"][0]))
    protos = [[float(v) for v in ln.split()] for ln in lines[i + 1:] if ln.strip()]
    return SomGrid(topo, np.array(protos, dtype=float).reshape(n1 * n2, -1),
                   tuple(head["features"]),
                   np.array([float(v) for v in head["offset"]]),
                   np.array([float(v) for v in head["scale"]]))
