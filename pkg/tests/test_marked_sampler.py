import math

import numpy as np
import pytest

from irglab.connection import Constant, HardDisk
from irglab.errors import ConfigurationError
from irglab.marked_sampler import (
    build_graph_ordered,
    build_graph_sequential,
    configuration_from_points,
    sample_binomial_configuration,
    sample_poisson_configuration,
)
from irglab.statespace import UniformCube, UniformTorus


def edge_set(graph):
    return {(int(i), int(j)) for i, j in graph.edges}


def test_poisson_count_mean_matches_intensity():
    cube = UniformCube(1)
    counts = [
        sample_poisson_configuration(cube, 5.0, seed).n_points
        for seed in range(100_000)
    ]
    mean = np.mean(counts)
    assert abs(mean - 5.0) < 3.0 * math.sqrt(5.0 / 100_000)


def test_same_seed_reproduces_configuration():
    torus = UniformTorus(2)
    a = sample_poisson_configuration(torus, 20.0, 77)
    b = sample_poisson_configuration(torus, 20.0, 77)
    assert a.n_points == b.n_points
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.mark_keys, b.mark_keys)


def test_zero_intensity_is_rejected():
    cube = UniformCube(1)
    with pytest.raises(ConfigurationError):
        sample_poisson_configuration(cube, 0.0, 1)
    with pytest.raises(ConfigurationError):
        sample_binomial_configuration(cube, 0, 1)


def test_binomial_prefix_coupling_with_poisson():
    torus = UniformTorus(2)
    po = sample_poisson_configuration(torus, 30.0, 123)
    bi = sample_binomial_configuration(torus, 10, 123)
    assert bi.n_points == 10
    assert np.array_equal(bi.points, po.points[:10])
    assert np.array_equal(bi.mark_keys, po.mark_keys[:10])


def test_binomial_prefix_coupling_across_sizes():
    cube = UniformCube(3)
    small = sample_binomial_configuration(cube, 5, 9)
    big = sample_binomial_configuration(cube, 8, 9)
    assert np.array_equal(small.points, big.points[:5])


def test_complete_and_empty_graphs():
    pts = np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.1]])
    conf = configuration_from_points(pts, seed=5)
    g1 = build_graph_ordered(conf, Constant(1.0))
    assert edge_set(g1) == {(0, 1), (0, 2), (1, 2)}
    g0 = build_graph_ordered(conf, Constant(0.0))
    assert g0.edges.shape == (0, 2)


def test_empty_and_singleton_configurations():
    cube = UniformCube(2)
    for n in (0, 1):
        pts = cube.sample_points(n, np.random.default_rng(2))
        conf = configuration_from_points(pts, seed=3)
        g = build_graph_ordered(conf, Constant(1.0))
        assert g.n_vertices == n
        assert g.edges.shape == (0, 2)


def test_two_point_edge_frequency():
    pts = np.array([[0.2], [0.8]])
    hits = 0
    n = 100_000
    for seed in range(n):
        conf = configuration_from_points(pts, seed=seed)
        g = build_graph_ordered(conf, Constant(0.5))
        hits += g.edges.shape[0]
    freq = hits / n
    assert abs(freq - 0.5) < 3.0 * math.sqrt(0.25 / n)


def test_ordered_builder_is_relabel_invariant():
    torus = UniformTorus(2)
    conf = sample_poisson_configuration(torus, 40.0, 11)
    phi = HardDisk(0.15, torus.metric)
    g = build_graph_ordered(conf, phi)
    perm = np.random.default_rng(0).permutation(conf.n_points)
    g_perm = build_graph_ordered(conf.permuted(perm), phi)
    assert np.array_equal(g.points, g_perm.points)
    assert edge_set(g) == edge_set(g_perm)


def test_sequential_builder_prefix_subgraph():
    cube = UniformCube(2)
    big = sample_binomial_configuration(cube, 12, 31)
    small = sample_binomial_configuration(cube, 7, 31)
    phi = Constant(0.4)
    g_big = build_graph_sequential(big, phi)
    g_small = build_graph_sequential(small, phi)
    restricted = {(i, j) for i, j in edge_set(g_big) if i < 7 and j < 7}
    assert edge_set(g_small) == restricted


def test_ordered_and_sequential_same_distribution():
    # three fixed points under constant(p): all 8 edge patterns should match
    # the independent-Bernoulli law for both builders
    pts = np.array([[0.15], [0.5], [0.85]])
    p = 0.3
    n = 100_000
    pattern_counts = {"ordered": np.zeros(8), "sequential": np.zeros(8)}
    for seed in range(n):
        conf = configuration_from_points(pts, seed=seed)
        for name, builder in (
            ("ordered", build_graph_ordered),
            ("sequential", build_graph_sequential),
        ):
            g = builder(conf, Constant(p))
            code = 0
            for a, b in edge_set(g):
                code |= 1 << (a + b - 1)  # (0,1)->1, (0,2)->2, (1,2)->4
            pattern_counts[name][code] += 1
    for bits in range(8):
        k = bin(bits).count("1")
        target = p**k * (1 - p) ** (3 - k)
        se = math.sqrt(target * (1 - target) / n)
        for name in ("ordered", "sequential"):
            assert abs(pattern_counts[name][bits] / n - target) <= 3.0 * se


def test_tree_path_matches_all_pairs_for_compact_kernels():
    torus = UniformTorus(2)
    phi = HardDisk(0.12, torus.metric)
    # hiding the support radius forces the dense all-pairs route
    dense_phi = HardDisk(0.12, torus.metric)
    dense_phi.support_radius = None
    for seed in (1, 2, 3):
        conf = sample_poisson_configuration(torus, 60.0, seed)
        g_fast = build_graph_ordered(conf, phi)
        g_slow = build_graph_ordered(conf, dense_phi)
        assert edge_set(g_fast) == edge_set(g_slow)


def test_degrees_match_edges():
    torus = UniformTorus(2)
    conf = sample_poisson_configuration(torus, 50.0, 8)
    g = build_graph_ordered(conf, HardDisk(0.2, torus.metric))
    deg = g.degrees()
    assert deg.sum() == 2 * g.edges.shape[0]
    assert deg.shape == (g.n_vertices,)
