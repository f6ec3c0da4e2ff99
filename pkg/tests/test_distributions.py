import math

import numpy as np

from irglab.distributions import (
    CountDistribution,
    bootstrap_tv_ci,
    empirical_law,
    factorial_moment,
    gaussian_cdf,
    normality_diagnostic,
    poisson_law,
    poisson_pmf,
    tv_distance,
    wasserstein_distance,
)


def test_poisson_law_reference_values():
    law = poisson_law(1.0)
    assert np.isclose(law.pmf[0], math.exp(-1.0))
    assert np.isclose(law.pmf[1], law.pmf[0])
    assert np.isclose(poisson_law(1e-9).pmf[0], 1.0)
    assert law.tail_mass < 1e-12
    assert np.isclose(law.pmf.sum() + law.tail_mass, 1.0)


def test_poisson_pmf_matches_direct_formula():
    for lam in (0.3, 2.0, 64.0):
        for k in (0, 1, 5, 70):
            direct = math.exp(-lam) * lam**k / math.factorial(k)
            assert np.isclose(poisson_pmf(k, lam), direct, rtol=1e-12)
    assert poisson_pmf(0, 0.0) == 1.0
    assert poisson_pmf(3, 0.0) == 0.0


def test_empirical_law_basic_shapes():
    law = empirical_law(np.zeros(10, dtype=int))
    assert np.isclose(law.pmf[0], 1.0)
    law = empirical_law(np.array([0, 1, 0, 1]))
    assert np.allclose(law.pmf, [0.5, 0.5])


def test_empirical_law_converges_to_target():
    rng = np.random.default_rng(3)
    samples = rng.poisson(2.0, 100_000)
    tv = tv_distance(empirical_law(samples), poisson_law(2.0))
    assert tv <= 0.01


def test_tv_distance_reference_values():
    q = poisson_law(1.0)
    assert tv_distance(q, q) == 0.0
    delta0 = CountDistribution(pmf=np.array([1.0]), tail_mass=0.0, kind="point")
    assert np.isclose(tv_distance(delta0, q), 1.0 - math.exp(-1.0))
    # Bernoulli(1/e) against Poisson(1/e), summed exactly over the support
    b = math.exp(-1.0)
    bern = CountDistribution(pmf=np.array([1.0 - b, b]), tail_mass=0.0, kind="bernoulli")
    assert np.isclose(tv_distance(bern, poisson_law(b)), 0.11323306112785984)


def test_wasserstein_reference_values():
    q = poisson_law(1.5)
    assert wasserstein_distance(q, q) == 0.0
    d0 = CountDistribution(pmf=np.array([1.0]), tail_mass=0.0, kind="point")
    d3 = CountDistribution(pmf=np.array([0.0, 0.0, 0.0, 1.0]), tail_mass=0.0, kind="point")
    assert np.isclose(wasserstein_distance(d0, d3), 3.0)
    bern = CountDistribution(pmf=np.array([0.5, 0.5]), tail_mass=0.0, kind="bernoulli")
    assert np.isclose(wasserstein_distance(bern, d0), 0.5)


def test_factorial_moment_values():
    value, se = factorial_moment(np.array([3, 3, 3]), 2)
    assert np.isclose(value, 6.0)
    assert se == 0.0
    value, _ = factorial_moment(np.ones(50, dtype=int), 2)
    assert value == 0.0
    rng = np.random.default_rng(8)
    samples = rng.poisson(3.0, 200_000)
    for ell in (1, 2, 3):
        value, se = factorial_moment(samples, ell)
        assert abs(value - 3.0**ell) <= 4.0 * se


def test_bootstrap_ci_brackets_the_point_estimate():
    rng = np.random.default_rng(11)
    samples = rng.poisson(1.0, 5000)
    target = poisson_law(1.0)
    ci = bootstrap_tv_ci(samples, target, resamples=200, rng=np.random.default_rng(0))
    assert ci.lower <= ci.point <= ci.upper
    assert ci.upper - ci.lower < 0.05
    # distances this small cannot exceed a loose cap
    assert ci.upper < 0.05


def test_gaussian_cdf_reference_values():
    assert np.isclose(gaussian_cdf(0.0), 0.5)
    assert np.isclose(gaussian_cdf(1.0), 0.8413447460685429)
    assert np.isclose(gaussian_cdf(-1.0), 1.0 - 0.8413447460685429)


def test_normality_diagnostic_on_poisson_counts():
    rng = np.random.default_rng(21)
    samples = rng.poisson(64.0, 100_000)
    rep = normality_diagnostic(samples, alpha_hat=64.0)
    assert not rep.degenerate
    # atoms shift the weak CDF; the midpoint of weak and strict lands near Phi
    for z, weak, strict in zip(rep.z_points, rep.empirical_cdf, rep.empirical_cdf_strict):
        mid = (weak + strict) / 2.0
        assert abs(mid - gaussian_cdf(z)) <= 0.01


def test_normality_diagnostic_degenerate_samples():
    rep = normality_diagnostic(np.full(100, 7), alpha_hat=7.0)
    assert rep.degenerate
    idx = rep.z_points.index(0.0)
    assert rep.empirical_cdf[idx] == 1.0
    assert rep.empirical_cdf_strict[idx] == 0.0
