"""Seeded synthetic borehole tables standing in for field permeability data.

Two presets:

``dam5``  Z (test elevation, m), L (tested section length, m), RQD (%),
          TWR (weathering label) and lugeon.
``xyz``   X, Y (site coordinates, m), Z (elevation, m) and lugeon.

Lugeon values are log-normal. In a configurable fraction of elevation zones
they fall with RQD; elsewhere RQD carries little signal, so the usual
inverse RQD/permeability rule holds only in part of the rock mass.
"""

from __future__ import annotations

import numpy as np

from .data import DECISION, Attribute, DecisionTable, TWR_CODES, dump_decision_table
from .errors import ConfigurationError, SizeError

PRESETS = ("dam5", "xyz")

# weathering labels ordered from fresh to highly weathered
_TWR_ORDER = sorted(TWR_CODES, key=TWR_CODES.get)


def synth_table(n_objects: int, preset: str = "dam5", seed: int = 0,
                reverse_fraction: float = 0.6, n_boreholes: int = 20) -> DecisionTable:
    if n_objects < 1:
        raise SizeError("n_objects must be positive")
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if not 0 <= reverse_fraction <= 1:
        raise ConfigurationError("reverse_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    if preset == "dam5":
        return _dam5(n_objects, rng, reverse_fraction, n_boreholes)
    return _xyz(n_objects, rng, n_boreholes)


def _zones(z, n_zones, rng, reverse_fraction):
    edges = np.linspace(z.min(), z.max() + 1e-9, n_zones + 1)
    zone = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, n_zones - 1)
    reverse = rng.random(n_zones) < reverse_fraction
    return zone, reverse


def _dam5(n, rng, reverse_fraction, n_boreholes):
    hole = rng.integers(0, n_boreholes, n)
    collar = 1185.0 + 125.0 * rng.random(n_boreholes)
    depth = 80.0 * rng.random(n)
    z = np.round(collar[hole] - depth, 2)
    length = rng.choice([2.0, 3.0, 5.0, 5.0, 5.0, 6.0], n)

    weathering = np.clip(4.0 * np.exp(-depth / 30.0) + rng.normal(0, 0.6, n), 0, 4)
    twr_idx = np.clip(np.rint(weathering * 2).astype(int), 0, len(_TWR_ORDER) - 1)
    twr = [_TWR_ORDER[i] for i in twr_idx]
    twr_code = np.array([TWR_CODES[t] for t in twr])

    rqd = np.clip(85.0 - 15.0 * twr_code + rng.normal(0, 12.0, n), 0, 100)
    rqd = np.round(rqd, 1)

    zone, reverse = _zones(z, 5, rng, reverse_fraction)
    slope = np.where(reverse[zone], -0.025, 0.004)
    log_lu = 1.2 + slope * (rqd - 50.0) + 0.25 * twr_code + 0.004 * (z - 1250.0) \
        + rng.normal(0, 0.35, n)
    lugeon = np.round(np.exp(log_lu), 3)

    attrs = (Attribute("z"), Attribute("l"), Attribute("rqd"),
             Attribute("twr", kind="symbolic"), Attribute("lugeon", DECISION))
    rows = tuple((float(a), float(b), float(c), d, float(e))
                 for a, b, c, d, e in zip(z, length, rqd, twr, lugeon))
    return DecisionTable(tuple(range(n)), attrs, rows)


def _xyz(n, rng, n_boreholes):
    hx = 500.0 * rng.random(n_boreholes)
    hy = 300.0 * rng.random(n_boreholes)
    collar = 1185.0 + 125.0 * rng.random(n_boreholes)
    hole = rng.integers(0, n_boreholes, n)
    depth = 80.0 * rng.random(n)
    x = np.round(hx[hole], 2)
    y = np.round(hy[hole], 2)
    z = np.round(collar[hole] - depth, 2)
    # a permeable channel across the site plus a near-surface loosening
    channel = np.exp(-((y - 0.4 * x - 60.0) ** 2) / (2 * 40.0 ** 2))
    log_lu = 0.8 + 1.8 * channel + 1.2 * np.exp(-depth / 20.0) + rng.normal(0, 0.3, n)
    lugeon = np.round(np.exp(log_lu), 3)
    attrs = (Attribute("x"), Attribute("y"), Attribute("z"), Attribute("lugeon", DECISION))
    rows = tuple((float(a), float(b), float(c), float(d)) for a, b, c, d in zip(x, y, z, lugeon))
    return DecisionTable(tuple(range(n)), attrs, rows)


def synth_text(n_objects: int, preset: str = "dam5", seed: int = 0, **kw) -> str:
    return dump_decision_table(synth_table(n_objects, preset, seed, **kw))
