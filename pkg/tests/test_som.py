import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from softgran import som
from softgran.data import Attribute, DecisionTable
from softgran.errors import ConfigurationError, MeasureError, ShapeError, TrainingError


def numeric_table(x, names):
    attrs = tuple(Attribute(n) for n in names)
    return DecisionTable(tuple(f"o{i}" for i in range(len(x))), attrs,
                         tuple(tuple(float(v) for v in r) for r in x))


def test_topology_validation():
    with pytest.raises(ConfigurationError):
        som.SomTopology(dims=(0, 3))
    with pytest.raises(ConfigurationError):
        som.SomTopology(lr_initial=0.01, lr_final=0.5)
    assert som.SomTopology(dims=(7, 9)).n_neurons == 63


def test_single_point_attracts_all_prototypes():
    x = np.tile([[3.0, -1.0]], (5, 1))
    grid = som.train_som(x, som.SomTopology(dims=(3, 3), epochs=500, seed=2))
    assert np.abs(grid.prototypes - [3.0, -1.0]).max() < 1e-6


def test_fixed_point_with_vanishing_rate():
    rng = np.random.default_rng(0)
    x = rng.random((6, 2))
    topo = som.SomTopology(dims=(2, 3), epochs=5, lr_initial=1e-14, lr_final=1e-14, seed=0)
    init = som.initialize_som(x, topo)
    trained = som.train_som(init.prototypes, topo, init=init)
    assert np.allclose(trained.prototypes, init.prototypes, atol=1e-10)


def test_two_clusters_two_neurons_matches_two_means():
    rng = np.random.default_rng(1)
    a = rng.normal([0, 0], 0.05, (30, 2))
    b = rng.normal([5, 5], 0.05, (30, 2))
    x = np.vstack([a, b])
    grid = som.train_som(x, som.SomTopology(dims=(1, 2), epochs=200, seed=3))
    # 2-means oracle: the clusters are far apart, so the optimum is the blob split
    centroids = [a.mean(0), b.mean(0)]
    for blob, c in ((a, centroids[0]), (b, centroids[1])):
        inside = [np.all(p >= blob.min(0)) and np.all(p <= blob.max(0)) for p in grid.prototypes]
        assert sum(inside) == 1
        nearest = min(grid.prototypes, key=lambda p: np.linalg.norm(p - c))
        assert np.linalg.norm(nearest - c) < 0.1


def test_empty_data_errors():
    with pytest.raises(TrainingError):
        som.train_som(np.empty((0, 2)), som.SomTopology())
    grid = som.train_som(np.eye(2), som.SomTopology(dims=(1, 2), epochs=2))
    with pytest.raises(MeasureError):
        som.quantization_error(grid, np.empty((0, 2)))


def test_bmu_examples():
    protos = np.array([[0.0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]])
    topo = som.SomTopology(dims=(2, 3))
    grid = som.SomGrid(topo, protos, ("a", "b"), np.zeros(2), np.ones(2))
    assert som.best_matching_unit(grid, [1.0, 1.0]) == 4
    # (1.5, 0.5): equidistant from 1, 2, 4 and 5; the lowest index wins
    assert som.best_matching_unit(grid, [1.5, 0.5]) == 1
    with pytest.raises(ShapeError):
        som.best_matching_unit(grid, [1.0, 2.0, 3.0])


def test_bmu_tie_between_two_and_five():
    protos = np.array([[9.0], [8.0], [1.0], [7.0], [6.0], [-1.0]])
    grid = som.SomGrid(som.SomTopology(dims=(6, 1)), protos, ("a",), np.zeros(1), np.ones(1))
    assert som.best_matching_unit(grid, [0.0]) == 2


def test_bmu_matches_exhaustive_scan():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(200, 3)) * [1, 10, 100]
    grid = som.train_som(x, som.SomTopology(dims=(4, 5), epochs=3, seed=1))
    probes = rng.normal(size=(500, 3)) * [1, 10, 100]
    got = som.bmu_indices(grid, probes)
    for p, k in zip(probes, got):
        assert oracles.nearest_index(p, grid.prototypes, grid.scale)[0] == k


def test_quantization_error_examples():
    rng = np.random.default_rng(3)
    x = rng.random((50, 2))
    grid = som.train_som(x, som.SomTopology(dims=(3, 3), epochs=5, seed=0))
    assert som.quantization_error(grid, grid.prototypes) == pytest.approx(0.0, abs=1e-12)
    want = np.mean([oracles.nearest_index(p, grid.prototypes, grid.scale)[1] for p in x])
    assert som.quantization_error(grid, x) == pytest.approx(want, rel=1e-12)
    one = som.SomGrid(som.SomTopology(dims=(1, 1)), np.array([[2.0, 3.0]]), ("a", "b"),
                      np.zeros(2), np.ones(2))
    assert som.quantization_error(one, [[2.0, 3.0]]) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(2, 2), (3, 3), (2, 4), (5, 1)]), st.integers(1, 4))
def test_training_does_not_increase_quantization_error(seed, dims, d):
    rng = np.random.default_rng(seed)
    x = rng.random((12 * dims[0] * dims[1], d)) * rng.uniform(0.5, 20, d)
    topo = som.SomTopology(dims=dims, epochs=20, seed=seed)
    before = som.quantization_error(som.initialize_som(x, topo), x)
    after = som.quantization_error(som.train_som(x, topo), x)
    assert after <= before


def test_training_is_deterministic():
    rng = np.random.default_rng(5)
    x = rng.random((30, 3))
    topo = som.SomTopology(dims=(2, 4), epochs=4, seed=9)
    assert np.array_equal(som.train_som(x, topo).prototypes, som.train_som(x, topo).prototypes)


def test_bubble_neighborhood_trains():
    rng = np.random.default_rng(5)
    x = rng.random((30, 2))
    topo = som.SomTopology(dims=(3, 3), neighborhood="bubble", epochs=20, seed=1)
    assert som.quantization_error(som.train_som(x, topo), x) <= \
        som.quantization_error(som.initialize_som(x, topo), x)


def test_crisp_granulate():
    rng = np.random.default_rng(2)
    x = rng.random((600, 3))
    t = numeric_table(x, "abc")
    grid = som.train_som(x, som.SomTopology(dims=(7, 9), epochs=2, seed=0), ("a", "b", "c"))
    g = som.crisp_granulate(grid, t)
    assert len(g.prototypes_table) <= 63
    assert set(g.assignment) == set(t.object_ids)
    assert sum(g.occupancy.values()) == 600
    assert all(c >= 1 for c in g.occupancy.values())
    assert g.prototypes_table.object_ids == tuple(f"n{k}" for k in sorted(g.occupancy))


def test_crisp_granulate_single_neuron():
    x = np.random.default_rng(0).random((10, 2))
    grid = som.train_som(x, som.SomTopology(dims=(1, 1), epochs=2), ("a", "b"))
    assert len(som.crisp_granulate(grid, numeric_table(x, "ab")).prototypes_table) == 1


def test_crisp_granulate_schema_mismatch():
    x = np.random.default_rng(0).random((10, 2))
    grid = som.train_som(x, som.SomTopology(dims=(1, 2), epochs=2), ("a", "b"))
    with pytest.raises(ShapeError):
        som.crisp_granulate(grid, numeric_table(x, "aq"))


# -- 1-D discretization -------------------------------------------------------------

def test_discretize_constant_and_single_level():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        levels, level_map = som.discretize_attribute([4.0] * 7, 3)
    assert set(levels) == {1} and len(level_map) == 1
    levels, _ = som.discretize_attribute(np.arange(10.0), 1)
    assert set(levels) == {1}


def test_discretize_warns_when_levels_exceed_values():
    with pytest.warns(RuntimeWarning):
        som.discretize_attribute([1.0, 2.0], 3)


def test_discretize_zero_to_nine_against_three_means():
    values = np.arange(10.0)
    levels, _ = som.discretize_attribute(values, 3, seed=0)
    bins = oracles.kmeans_1d_exhaustive(values.tolist(), 3)
    oracle_cuts = [b[0] for b in bins[1:]]
    cuts = [float(values[i]) for i in range(1, 10) if levels[i] != levels[i - 1]]
    assert sorted(set(levels)) == [1, 2, 3]
    assert list(levels) == sorted(levels)
    assert len(cuts) == 2
    assert all(abs(c - o) <= 1 for c, o in zip(cuts, oracle_cuts))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.integers(1, 5))
def test_levels_are_monotone_in_value(values, k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        levels, level_map = som.discretize_attribute(values, k, epochs=5)
    pairs = sorted(zip(values, levels))
    assert all(a[1] <= b[1] for a, b in zip(pairs, pairs[1:]))
    protos = [level_map[lv] for lv in sorted(level_map)]
    assert protos == sorted(protos)


def test_apply_levels_ties_go_low():
    assert som.apply_levels([1.5, 0.0, 9.0], {1: 1.0, 2: 2.0}) == (1, 1, 2)


def test_grid_text_roundtrip():
    rng = np.random.default_rng(8)
    x = rng.random((20, 2)) * 100
    grid = som.train_som(x, som.SomTopology(dims=(2, 3), epochs=3, seed=4), ("z", "rqd"))
    back = som.load_grid(som.dump_grid(grid))
    assert np.array_equal(back.prototypes, grid.prototypes)
    assert back.topology.dims == grid.topology.dims
    assert back.topology.radius0 == grid.topology.radius0
    assert back.feature_names == grid.feature_names
    probes = rng.random((1000, 2)) * 100
    assert np.array_equal(som.bmu_indices(back, probes), som.bmu_indices(grid, probes))
