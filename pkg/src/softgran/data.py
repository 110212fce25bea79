"""Decision tables, ingestion, train/test splitting, TWR codes and error measures."""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (ConfigurationError, EncodingError, IngestionError,
                     MeasureError, SizeError, UnknownAttributeError)

log = logging.getLogger(__name__)

CONDITION = "condition"
DECISION = "decision"
NUMERIC = "numeric"
SYMBOLIC = "symbolic"


@dataclass(frozen=True)
class Attribute:
    name: str
    role: str = CONDITION
    kind: str = NUMERIC

    def __post_init__(self):
        if self.role not in (CONDITION, DECISION):
            raise ConfigurationError(f"bad role {self.role!r} for {self.name!r}")
        if self.kind not in (NUMERIC, SYMBOLIC):
            raise ConfigurationError(f"bad kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class DecisionTable:
    """Objects x attributes, with condition/decision roles.

    Rows are tuples of cells; numeric cells are floats, symbolic cells any
    hashable value. The table is immutable; derived tables are new objects.
    """

    object_ids: tuple
    attributes: tuple[Attribute, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "object_ids", tuple(self.object_ids))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate attribute names")
        if not any(a.role == CONDITION for a in self.attributes):
            raise ConfigurationError("table needs at least one condition attribute")
        if sum(a.role == DECISION for a in self.attributes) > 1:
            raise ConfigurationError("at most one decision attribute is allowed")
        if len(set(self.object_ids)) != len(self.object_ids):
            raise ConfigurationError("object ids must be unique")
        if len(self.rows) != len(self.object_ids):
            raise ConfigurationError("row count does not match object id count")
        width = len(self.attributes)
        for oid, row in zip(self.object_ids, self.rows):
            if len(row) != width:
                raise ConfigurationError(f"object {oid!r} has {len(row)} cells, expected {width}")
            if any(c is None for c in row):
                raise ConfigurationError(f"object {oid!r} has a missing cell")

    def __len__(self):
        return len(self.rows)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def condition_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes if a.role == CONDITION)

    @property
    def decision_name(self) -> str | None:
        for a in self.attributes:
            if a.role == DECISION:
                return a.name
        return None

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise UnknownAttributeError(f"unknown attribute {name!r}")

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def column(self, name: str) -> tuple:
        j = self.index(name)
        return tuple(r[j] for r in self.rows)

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        """Float matrix of the given (default: all) attributes."""
        names = self.names if names is None else tuple(names)
        idx = [self.index(n) for n in names]
        try:
            return np.array([[float(r[j]) for j in idx] for r in self.rows],
                            dtype=float).reshape(len(self.rows), len(idx))
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"non-numeric cells among {names}") from exc

    def row_dict(self, i: int) -> dict:
        return dict(zip(self.names, self.rows[i]))

    def take(self, indices: Iterable[int]) -> "DecisionTable":
        indices = list(indices)
        return DecisionTable(tuple(self.object_ids[i] for i in indices), self.attributes,
                             tuple(self.rows[i] for i in indices))

    def with_column(self, name: str, values: Sequence, kind: str | None = None) -> "DecisionTable":
        """Replace the cells of one attribute, optionally changing its kind."""
        j = self.index(name)
        if len(values) != len(self.rows):
            raise ConfigurationError("replacement column has wrong length")
        old = self.attributes[j]
        attrs = list(self.attributes)
        attrs[j] = Attribute(old.name, old.role, kind or old.kind)
        rows = [r[:j] + (v,) + r[j + 1:] for r, v in zip(self.rows, values)]
        return DecisionTable(self.object_ids, tuple(attrs), tuple(rows))

    def with_roles(self, role_map: Mapping[str, str]) -> "DecisionTable":
        for name in role_map:
            self.index(name)
        attrs = tuple(Attribute(a.name, role_map.get(a.name, a.role), a.kind)
                      for a in self.attributes)
        return DecisionTable(self.object_ids, attrs, self.rows)


@dataclass(frozen=True)
class TrainTestSplit:
    train: DecisionTable
    test: DecisionTable
    seed: int


def _parse_float(text):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_decision_table(source, role_map: Mapping[str, str], delimiter: str = ",",
                        kinds: Mapping[str, str] | None = None,
                        id_column: str | None = None) -> DecisionTable:
    """Parse delimiter-separated text with a header row.

    `source` is a path, an open text file, or the text itself when it
    contains a newline. Attributes absent from `role_map` become condition
    attributes. A column is numeric when every cell parses as a finite real,
    unless `kinds` says otherwise; a declared-numeric column with an
    unparseable cell is an ingestion error.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    kinds = dict(kinds or {})

    lines = [(n, ln) for n, ln in enumerate(io.StringIO(text).read().splitlines(), 1)
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise IngestionError("missing header row")
    header_line, header = lines[0]
    names = [h.strip() for h in header.split(delimiter)]
    if len(set(names)) != len(names) or "" in names:
        raise IngestionError("header has empty or duplicate names", header_line)
    for name in list(role_map) + list(kinds):
        if name not in names:
            raise ConfigurationError(f"unknown attribute {name!r} in configuration")
    if sum(1 for r in role_map.values() if r == DECISION) != 1:
        raise ConfigurationError("role map must name exactly one decision attribute")
    if id_column is not None and id_column not in names:
        raise ConfigurationError(f"unknown id column {id_column!r}")

    raw = []
    for n, ln in lines[1:]:
        cells = [c.strip() for c in ln.split(delimiter)]
        if len(cells) != len(names):
            raise IngestionError(f"expected {len(names)} fields, got {len(cells)}", n)
        if any(c == "" for c in cells):
            raise IngestionError("empty cell", n)
        raw.append((n, cells))
    if not raw:
        raise IngestionError("no objects")

    col_kinds = []
    for j, name in enumerate(names):
        if name in kinds:
            col_kinds.append(kinds[name])
        else:
            numeric = all(_parse_float(cells[j]) is not None for _, cells in raw)
            col_kinds.append(NUMERIC if numeric else SYMBOLIC)

    rows, ids = [], []
    id_j = names.index(id_column) if id_column is not None else None
    for k, (n, cells) in enumerate(raw):
        row = []
        for j, cell in enumerate(cells):
            if col_kinds[j] == NUMERIC:
                value = _parse_float(cell)
                if value is None:
                    raise IngestionError(f"unparseable numeric value {cell!r} for {names[j]!r}", n)
                row.append(value)
            else:
                row.append(cell)
        if id_j is not None:
            ids.append(row.pop(id_j))
        else:
            ids.append(k)
        rows.append(tuple(row))

    attrs = [Attribute(name, role_map.get(name, CONDITION), col_kinds[j])
             for j, name in enumerate(names) if j != id_j]
    if len(set(ids)) != len(ids):
        raise IngestionError("duplicate object ids")
    return DecisionTable(tuple(ids), tuple(attrs), tuple(rows))


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_decision_table(table: DecisionTable, delimiter: str = ",") -> str:
    out = [delimiter.join(table.names)]
    for row in table.rows:
        out.append(delimiter.join(format_cell(v) for v in row))
    return "\n".join(out) + "\n"


def split_train_test(table: DecisionTable, n_train: int, n_test: int, seed: int) -> TrainTestSplit:
    if n_train < 0 or n_test < 0:
        raise SizeError("split sizes must be non-negative")
    if n_train + n_test > len(table):
        raise SizeError(f"cannot take {n_train}+{n_test} objects from a table of {len(table)}")
    perm = np.random.default_rng(seed).permutation(len(table))
    train_idx = sorted(perm[:n_train].tolist())
    test_idx = sorted(perm[n_train:n_train + n_test].tolist())
    dropped = len(table) - n_train - n_test
    log.info("split: %d train, %d test, %d discarded", n_train, n_test, dropped)
    return TrainTestSplit(_subset(table, train_idx), _subset(table, test_idx), seed)


def _subset(table, idx):
    # An empty side still keeps the schema.
    return DecisionTable(tuple(table.object_ids[i] for i in idx), table.attributes,
                         tuple(table.rows[i] for i in idx))


# Type of Weathering Rock ordinal codes.
TWR_CODES = {
    "Fresh-MW": 1.5,
    "SW-MW": 2.0,
    "Fresh-SW": 0.5,
    "Fresh": 0.0,
    "MW": 3.0,
    "CW": 2.5,
    "SW": 1.0,
    "HW-MW": 3.5,
    "HW": 4.0,
}
_TWR_LABELS = {v: k for k, v in TWR_CODES.items()}


def encode_twr(label: str) -> float:
    try:
        return TWR_CODES[label.strip()]
    except (KeyError, AttributeError):
        raise EncodingError(f"unknown weathering label {label!r}; valid labels: "
                            + ", ".join(TWR_CODES)) from None


def decode_twr(code: float) -> str:
    try:
        return _TWR_LABELS[float(code)]
    except (KeyError, TypeError, ValueError):
        raise EncodingError(f"no weathering label has code {code!r}") from None


def encode_twr_column(table: DecisionTable, name: str = "twr") -> DecisionTable:
    """Turn a symbolic TWR label column into its numeric codes (no-op if numeric)."""
    if table.attribute(name).kind == NUMERIC:
        return table
    return table.with_column(name, [encode_twr(v) for v in table.column(name)], NUMERIC)


class _Unrecognized:
    """Marker for an object no rule could classify."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNRECOGNIZED"

    def __reduce__(self):
        return (_Unrecognized, ())


UNRECOGNIZED = _Unrecognized()


def rmse(predicted, actual) -> float:
    p = np.asarray(predicted, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.size == 0 or p.size != a.size:
        raise MeasureError(f"rmse needs equal nonzero lengths, got {p.size} and {a.size}")
    return float(np.sqrt(np.sum((p - a) ** 2) / p.size))


def mse_classification(predicted, actual, unrecognized_penalty: float = 1.0) -> float:
    """Mean squared class difference; each UNRECOGNIZED prediction costs the penalty."""
    predicted, actual = list(predicted), list(actual)
    if not predicted or len(predicted) != len(actual):
        raise MeasureError(f"mse needs equal nonzero lengths, got {len(predicted)} and {len(actual)}")
    total = 0.0
    for p, a in zip(predicted, actual):
        if p is UNRECOGNIZED:
            total += unrecognized_penalty
        else:
            total += (float(p) - float(a)) ** 2
    return total / len(predicted)
