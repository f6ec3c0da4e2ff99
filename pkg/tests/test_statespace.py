import math

import numpy as np
import pytest

from irglab.errors import ConfigurationError, DomainError
from irglab.statespace import (
    IsotropicGaussian,
    ProductWeibull,
    TabulatedDensity,
    UniformCube,
    UniformTorus,
    build_measure,
    unit_ball_volume,
)


def test_unit_ball_volumes():
    assert np.isclose(unit_ball_volume(1), 2.0)
    assert np.isclose(unit_ball_volume(2), math.pi)
    assert np.isclose(unit_ball_volume(3), 4.0 * math.pi / 3.0)


def test_uniform_cube_samples_stay_in_support():
    m = UniformCube(2)
    pts = m.sample_points(500, np.random.default_rng(4))
    assert pts.shape == (500, 2)
    assert np.all(pts >= 0.0)
    assert np.all(pts < 1.0)


def test_sample_points_prefix_is_stable():
    m = UniformTorus(3)
    a = m.sample_points(50, np.random.default_rng(8))
    b = m.sample_points(80, np.random.default_rng(8))
    assert np.array_equal(a, b[:50])


def test_gaussian_sample_mean_matches_moments():
    m = IsotropicGaussian(1)
    x = m.sample_points(10**6, np.random.default_rng(12))[:, 0]
    assert abs(x.mean()) < 4.0 / math.sqrt(10**6)
    assert np.isclose(x.var(), 1.0, atol=0.01)


def test_weibull_shape_one_is_exponential():
    m = ProductWeibull(1, shape=1.0, scale=1.0)
    x = m.sample_points(10**6, np.random.default_rng(5))[:, 0]
    assert np.isclose(x.mean(), 1.0, atol=4.0 / math.sqrt(10**6))


def test_densities_at_reference_points():
    assert np.isclose(UniformTorus(2).density(np.array([0.3, 0.9])), 1.0)
    assert np.isclose(
        IsotropicGaussian(2).density(np.zeros(2)), 1.0 / (2.0 * math.pi)
    )


def test_uniform_cube_density_outside_support_is_an_error():
    m = UniformCube(2)
    with pytest.raises(DomainError):
        m.density(np.array([1.5, 0.5]))
    with pytest.raises(DomainError):
        m.density(np.array([-0.1, 0.5]))


def test_ball_measures_closed_forms():
    torus = UniformTorus(2)
    est = torus.ball_measure(np.array([0.5, 0.5]), 0.05)
    assert np.isclose(est.value, math.pi * 0.0025)
    assert est.std_error == 0.0

    cube = UniformCube(1)
    est = cube.ball_measure(np.array([0.5]), 0.25)
    assert np.isclose(est.value, 0.5)

    # interval clipped at the boundary
    est = cube.ball_measure(np.array([0.1]), 0.25)
    assert np.isclose(est.value, 0.35)

    assert torus.ball_measure(np.array([0.5, 0.5]), 0.0).value == 0.0


def test_ball_measure_monte_carlo_agrees_with_exact():
    gauss = IsotropicGaussian(2)
    est = gauss.ball_measure(
        np.zeros(2), 1.0, rng=np.random.default_rng(3), samples=200_000
    )
    # P(|Z| <= 1) for a 2d standard normal = 1 - exp(-1/2)
    truth = 1.0 - math.exp(-0.5)
    assert est.std_error > 0.0
    assert abs(est.value - truth) < 4.0 * est.std_error


def test_torus_metric_wraps_distances():
    torus = UniformTorus(1)
    d = torus.metric.distance(np.array([0.95]), np.array([0.05]))
    assert np.isclose(d, 0.1)


def test_tabulated_density_sampling_matches_weights():
    grid = np.array([[3.0, 1.0], [0.0, 0.0]])
    m = TabulatedDensity(2, grid)
    pts = m.sample_points(40_000, np.random.default_rng(9))
    # cell (0, 0) holds 3/4 of the mass; axis 0 indexes the first coordinate
    in_heavy = (pts[:, 0] < 0.5) & (pts[:, 1] < 0.5)
    frac = in_heavy.mean()
    assert np.isclose(frac, 0.75, atol=3.0 * math.sqrt(0.75 * 0.25 / 40_000))
    assert np.isclose(m.density(np.array([0.25, 0.25])), 3.0)


def test_tabulated_density_nan_cell_is_undefined():
    grid = np.array([[1.0, np.nan], [1.0, 1.0]])
    m = TabulatedDensity(2, grid)
    with pytest.raises(DomainError):
        m.density(np.array([0.25, 0.75]))
    assert np.isclose(m.density(np.array([0.25, 0.25])), 4.0 / 3.0)


def test_build_measure_validates_combinations():
    assert build_measure("flat-torus", 2).dimension == 2
    assert isinstance(build_measure("unit-cube", 1), UniformCube)
    g = build_measure("euclidean-with-density", 2, "isotropic-gaussian")
    assert isinstance(g, IsotropicGaussian)
    w = build_measure("euclidean-with-density", 1, "product-weibull", shape=2.0, scale=1.5)
    assert isinstance(w, ProductWeibull)
    with pytest.raises(ConfigurationError):
        build_measure("flat-torus", 2, "isotropic-gaussian")
    with pytest.raises(ConfigurationError):
        build_measure("unit-cube", 0)
    with pytest.raises(ConfigurationError):
        build_measure("unit-cube", 9)
    with pytest.raises(ConfigurationError):
        build_measure("nowhere", 2)
