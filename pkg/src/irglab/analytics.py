"""Analytic and Monte-Carlo evaluation of expectation formulas and bounds.

The quantities mirror the observables in graph_stats for a Poisson
configuration with intensity s against a reference measure mu:

* expected_degree_count: E D_j = s * int (s g(x))^j / j! * exp(-s g(x)) mu(dx)
  with the mean field g(x) = int phi(x, y) mu(dy),
* expected_k_components: E N_k = s^k/k! * int h_phi(x_1..x_k)
  * exp(-s * int phi(z, {x_1..x_k}) mu(dz)) mu^k(dx),
* expected_edges / expected_connected_k: E H_k = s^k/k! * int h_phi mu^k,
* edge_stein_bound: d_TV(H_2, Poisson(alpha)) <= (1 ^ 1/alpha)
  * int (int phi(x, y) s mu(dy))^2 s mu(dx),
* ustat_gamma: the same bound shape for a general symmetric selection
  predicate h over k points, through the coupling constant gamma.

Closed forms are used whenever the (kernel, measure) pair declares its
mean-field profile; everything else falls back to (nested) Monte-Carlo.
Inner integrals that appear squared are estimated with two independent
inner replicas, whose product is unbiased for the square.  Inner integrals
inside exponentials keep a bias of order s^2 Var(g_hat)/2; the default
inner sample count max(1e3, 100 * (s * sup phi)^2), clamped at 1e6, keeps
that bias below roughly 1e-3 wherever the closed forms do not apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.random import Generator

from .connection import ConnectionFunction, connectedness_prob, homogeneity
from .distributions import poisson_pmf
from .errors import CalibrationError, CapabilityError, DomainError
from .statespace import ProbabilityMeasure

DEGREE_MAX = 16
COMPONENT_MAX = 5

_CHUNK = 64


@dataclass(frozen=True)
class ExpectationEstimate:
    """An expectation with its uncertainty (std_error 0.0 on exact paths)."""

    value: float
    std_error: float
    samples: int
    method: str


@dataclass(frozen=True)
class SteinBound:
    """Poisson-approximation error bounds for the edge count."""

    alpha: float
    alpha_std_error: float
    tv_bound: float
    w_bound: float
    tv_std_error: float
    w_std_error: float
    method: str


@dataclass(frozen=True)
class UStatBound:
    """Poisson-approximation error bounds for a k-point selection count."""

    k: int
    alpha: float
    alpha_std_error: float
    gamma: float
    gamma_std_error: float
    tv_bound: float
    w_bound: float
    tv_std_error: float
    w_std_error: float
    method: str


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of tuning a kernel knob to hit a target expectation."""

    knob: str
    value: float
    achieved: float
    target: float
    statistic: str
    iterations: int


@dataclass(frozen=True)
class DegreeRatioReport:
    """Consecutive-degree-count ratio against its homogeneity envelope."""

    order: int
    ratio: float
    ratio_std_error: float
    lower: float
    upper: float
    epsilon: float
    sup_mean_field: float
    passed: bool
    method: str


def default_inner_samples(s: float, phi: ConnectionFunction) -> int:
    scale = (s * phi.sup_value()) ** 2 * 100.0
    return int(max(1000.0, min(scale, 1_000_000.0)))


def _rng_or_default(rng: Optional[Generator]) -> Generator:
    return rng if rng is not None else np.random.default_rng(0)


def _mean_field_mc(
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    xs: np.ndarray,
    inner: int,
    rng: Generator,
    replicas: int = 1,
) -> np.ndarray:
    """Monte-Carlo g_hat(x) for each probe row, shape (len(xs), replicas)."""
    out = np.empty((xs.shape[0], replicas))
    for a in range(0, xs.shape[0], _CHUNK):
        b = min(a + _CHUNK, xs.shape[0])
        z = measure.sample_points((b - a) * replicas * inner, rng)
        z = z.reshape(b - a, replicas, inner, measure.dimension)
        vals = phi.evaluate_pairs(xs[a:b, None, None, :], z)
        out[a:b] = vals.mean(axis=2)
    return out


def expected_degree_count(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    j: int,
    outer_samples: int = 4000,
    inner_samples: Optional[int] = None,
    rng: Optional[Generator] = None,
) -> ExpectationEstimate:
    """Expected number of vertices with degree exactly j."""
    if j < 0:
        raise DomainError(f"degree must be nonnegative, got {j}")
    if j > DEGREE_MAX:
        raise CapabilityError(f"degree counts are supported up to j = {DEGREE_MAX}, got {j}")
    profile = phi.mean_field_profile(measure)
    if profile is not None:
        value = s * sum(w * poisson_pmf(j, s * g) for w, g in profile)
        return ExpectationEstimate(float(value), 0.0, 0, "closed-form")
    rng = _rng_or_default(rng)
    inner = inner_samples if inner_samples is not None else default_inner_samples(s, phi)
    xs = measure.sample_points(outer_samples, rng)
    g_hat = _mean_field_mc(phi, measure, xs, inner, rng)[:, 0]
    integrand = poisson_pmf(j, s * g_hat)
    value = s * float(np.mean(integrand))
    se = s * float(np.std(integrand, ddof=1) / math.sqrt(outer_samples))
    return ExpectationEstimate(value, se, outer_samples, "nested-monte-carlo")


def expected_edges(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    samples: int = 200_000,
    rng: Optional[Generator] = None,
) -> ExpectationEstimate:
    """Expected edge count E H_2 = s^2/2 * double integral of phi."""
    profile = phi.mean_field_profile(measure)
    if profile is not None:
        value = 0.5 * s * s * sum(w * g for w, g in profile)
        return ExpectationEstimate(float(value), 0.0, 0, "closed-form")
    rng = _rng_or_default(rng)
    x = measure.sample_points(samples, rng)
    y = measure.sample_points(samples, rng)
    vals = phi.evaluate_pairs(x, y)
    value = 0.5 * s * s * float(vals.mean())
    se = 0.5 * s * s * float(vals.std(ddof=1) / math.sqrt(samples))
    return ExpectationEstimate(value, se, samples, "monte-carlo")


def _h_values(
    phi: ConnectionFunction, tuples: np.ndarray, method: str
) -> np.ndarray:
    return np.array([connectedness_prob(phi, t, method=method) for t in tuples])


def expected_connected_k(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    k: int,
    outer_samples: int = 4000,
    h_method: str = "auto",
    rng: Optional[Generator] = None,
) -> ExpectationEstimate:
    """Expected connected induced k-subgraph count E H_k = s^k/k! int h_phi mu^k."""
    if k < 1:
        raise DomainError(f"subgraph order must be positive, got {k}")
    if k == 1:
        return ExpectationEstimate(float(s), 0.0, 0, "closed-form")
    if k == 2:
        return expected_edges(s, phi, measure, samples=outer_samples, rng=rng)
    scale = s**k / math.factorial(k)
    const = _constant_h(phi, k)
    if const is not None:
        return ExpectationEstimate(float(scale * const), 0.0, 0, "closed-form")
    rng = _rng_or_default(rng)
    tuples = measure.sample_points(outer_samples * k, rng).reshape(
        outer_samples, k, measure.dimension
    )
    hv = _h_values(phi, tuples, h_method)
    value = scale * float(hv.mean())
    se = scale * float(hv.std(ddof=1) / math.sqrt(outer_samples))
    return ExpectationEstimate(value, se, outer_samples, "monte-carlo")


def _constant_h(phi: ConnectionFunction, k: int) -> Optional[float]:
    """h_phi for position-independent kernels: connectivity of a k-point
    graph with uniform edge probability."""
    from .connection import Constant

    if isinstance(phi, Constant):
        dummy = np.zeros((k, 1))
        return connectedness_prob(phi, dummy, method="auto")
    return None


def expected_k_components(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    k: int,
    outer_samples: int = 4000,
    inner_samples: Optional[int] = None,
    h_method: str = "auto",
    rng: Optional[Generator] = None,
) -> ExpectationEstimate:
    """Expected number of connected components on exactly k vertices."""
    if k < 1:
        raise DomainError(f"component order must be positive, got {k}")
    if k > COMPONENT_MAX:
        raise CapabilityError(
            f"component counts are supported up to k = {COMPONENT_MAX}, got {k}"
        )
    if k == 1:
        return expected_degree_count(
            s, phi, measure, 0, outer_samples, inner_samples, rng
        )
    scale = s**k / math.factorial(k)
    const = _constant_h(phi, k)
    if const is not None and phi.constant_mean_field(measure) is not None:
        p = phi.constant_mean_field(measure)
        group = 1.0 - (1.0 - p) ** k
        value = scale * const * math.exp(-s * group)
        return ExpectationEstimate(float(value), 0.0, 0, "closed-form")
    rng = _rng_or_default(rng)
    inner = inner_samples if inner_samples is not None else default_inner_samples(s, phi)
    d = measure.dimension
    values = np.empty(outer_samples)
    for a in range(0, outer_samples, _CHUNK):
        b = min(a + _CHUNK, outer_samples)
        tuples = measure.sample_points((b - a) * k, rng).reshape(b - a, k, d)
        z = measure.sample_points((b - a) * inner, rng).reshape(b - a, inner, d)
        probs = phi.evaluate_pairs(z[:, :, None, :], tuples[:, None, :, :])
        group_hat = 1.0 - np.prod(1.0 - probs, axis=2)       # (chunk, inner)
        g_hat = group_hat.mean(axis=1)                        # (chunk,)
        hv = _h_values(phi, tuples, h_method)
        values[a:b] = hv * np.exp(-s * g_hat)
    value = scale * float(values.mean())
    se = scale * float(values.std(ddof=1) / math.sqrt(outer_samples))
    return ExpectationEstimate(value, se, outer_samples, "nested-monte-carlo")


def edge_stein_bound(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    outer_samples: int = 4000,
    inner_samples: Optional[int] = None,
    rng: Optional[Generator] = None,
    alpha: Optional[float] = None,
) -> SteinBound:
    """Stein-method bounds on the Poisson approximation of the edge count.

    tv <= (1 ^ 1/alpha) * s^3 * int g^2 dmu and the Wasserstein variant with
    prefactor 3 * (1 ^ alpha^{-1/2}).
    """
    rng = _rng_or_default(rng)
    if alpha is None:
        alpha_est = expected_edges(s, phi, measure, rng=rng)
        alpha, alpha_se = alpha_est.value, alpha_est.std_error
    else:
        alpha_se = 0.0
    profile = phi.mean_field_profile(measure)
    if profile is not None:
        integral = s**3 * sum(w * g * g for w, g in profile)
        integral_se = 0.0
        method = "closed-form"
        samples = 0
    else:
        inner = inner_samples if inner_samples is not None else default_inner_samples(s, phi)
        xs = measure.sample_points(outer_samples, rng)
        g_pair = _mean_field_mc(phi, measure, xs, inner, rng, replicas=2)
        prods = g_pair[:, 0] * g_pair[:, 1]
        integral = s**3 * float(prods.mean())
        integral_se = s**3 * float(prods.std(ddof=1) / math.sqrt(outer_samples))
        method = "nested-monte-carlo"
        samples = outer_samples
    tv_pref = 1.0 if alpha <= 1.0 else 1.0 / alpha
    w_pref = 3.0 * (1.0 if alpha <= 1.0 else alpha**-0.5)
    return SteinBound(
        alpha=float(alpha),
        alpha_std_error=float(alpha_se),
        tv_bound=float(tv_pref * integral),
        w_bound=float(w_pref * integral),
        tv_std_error=float(tv_pref * integral_se),
        w_std_error=float(w_pref * integral_se),
        method=method,
    )


def edge_indicator_h(phi: ConnectionFunction) -> Callable[[np.ndarray], np.ndarray]:
    """The pair predicate h(x, y) = phi(x, y) for {0,1}-valued kernels."""
    def h(points: np.ndarray) -> np.ndarray:
        return phi.evaluate_pairs(points[..., 0, :], points[..., 1, :])

    return h


def _check_symmetry(
    h: Callable[[np.ndarray], np.ndarray],
    k: int,
    measure: ProbabilityMeasure,
    rng: Generator,
) -> None:
    tuples = measure.sample_points(8 * k, rng).reshape(8, k, measure.dimension)
    base = np.asarray(h(tuples), dtype=float)
    for _ in range(3):
        perm = rng.permutation(k)
        permuted = np.asarray(h(tuples[:, perm, :]), dtype=float)
        if not np.allclose(base, permuted):
            raise DomainError("selection predicate h is not symmetric in its k points")


def ustat_gamma(
    k: int,
    h: Callable[[np.ndarray], np.ndarray],
    s: float,
    measure: ProbabilityMeasure,
    outer_samples: int = 4000,
    inner_samples: int = 256,
    rng: Optional[Generator] = None,
    alpha: Optional[float] = None,
) -> UStatBound:
    """Poisson-approximation bounds for the count of k-subsets selected by h.

    gamma = sum over l < k of k!/(l! ((k-l)!)^2) * int (int h dlambda^{k-l})^2
    dlambda^l with lambda = s mu; the two inner integrals in the square are
    estimated by independent replicas so their product is unbiased.
    alpha = 1/k! int h dlambda^k, estimated from the l = 1 replica draws
    unless given.  tv <= (1 ^ 1/alpha) gamma / k!, w <= 3 (1 ^ alpha^{-1/2})
    gamma / k!.
    """
    if k < 2:
        raise DomainError(f"ustat bounds need k >= 2, got {k}")
    rng = _rng_or_default(rng)
    _check_symmetry(h, k, measure, rng)
    d = measure.dimension
    gamma = 0.0
    gamma_var = 0.0
    alpha_mean = None
    alpha_se = 0.0
    for ell in range(1, k):
        coeff = math.factorial(k) / (
            math.factorial(ell) * math.factorial(k - ell) ** 2
        )
        outer_scale = s**ell
        inner_scale = s ** (k - ell)
        prods = np.empty(outer_samples)
        h_bar = np.empty(outer_samples) if ell == 1 else None
        for a in range(0, outer_samples, _CHUNK):
            b = min(a + _CHUNK, outer_samples)
            xs = measure.sample_points((b - a) * ell, rng).reshape(b - a, 1, 1, ell, d)
            ys = measure.sample_points((b - a) * 2 * inner_samples * (k - ell), rng)
            ys = ys.reshape(b - a, 2, inner_samples, k - ell, d)
            xs_full = np.broadcast_to(xs, (b - a, 2, inner_samples, ell, d))
            tuples = np.concatenate([xs_full, ys], axis=3)
            hv = np.asarray(h(tuples), dtype=float)        # (chunk, 2, inner)
            rep_means = hv.mean(axis=2)                    # (chunk, 2)
            prods[a:b] = rep_means[:, 0] * rep_means[:, 1]
            if h_bar is not None:
                h_bar[a:b] = hv.reshape(b - a, -1).mean(axis=1)
        term_vals = coeff * outer_scale * inner_scale**2 * prods
        gamma += float(term_vals.mean())
        gamma_var += float(term_vals.var(ddof=1) / outer_samples)
        if h_bar is not None and alpha is None:
            scale_k = s**k / math.factorial(k)
            alpha_mean = scale_k * float(h_bar.mean())
            alpha_se = scale_k * float(h_bar.std(ddof=1) / math.sqrt(outer_samples))
    if alpha is None:
        alpha = alpha_mean if alpha_mean is not None else 0.0
    else:
        alpha_se = 0.0
    gamma_se = math.sqrt(gamma_var)
    tv_pref = 1.0 if alpha <= 1.0 else 1.0 / alpha
    w_pref = 3.0 * (1.0 if alpha <= 1.0 else alpha**-0.5)
    kfac = math.factorial(k)
    return UStatBound(
        k=k,
        alpha=float(alpha),
        alpha_std_error=float(alpha_se),
        gamma=float(gamma),
        gamma_std_error=float(gamma_se),
        tv_bound=float(tv_pref * gamma / kfac),
        w_bound=float(w_pref * gamma / kfac),
        tv_std_error=float(tv_pref * gamma_se / kfac),
        w_std_error=float(w_pref * gamma_se / kfac),
        method="nested-monte-carlo",
    )


_STAT_KINDS = ("D", "N")


def calibrate_parameter(
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    s: float,
    target_alpha: float,
    statistic: str = "D0",
    tolerance: float = 1e-9,
    max_iterations: int = 200,
    outer_samples: int = 2000,
    inner_samples: Optional[int] = None,
    mc_seed: int = 7,
) -> CalibrationResult:
    """Bisect the family's knob until the statistic's expectation hits target_alpha.

    The expectation is evaluated with a fixed integration seed per probe, so
    the objective is deterministic; Monte-Carlo paths therefore need a
    tolerance compatible with their noise floor.  A target not bracketed by
    the knob's range raises CalibrationError.
    """
    kind, index = _parse_statistic(statistic)

    def expectation(knob_value: float) -> float:
        probe = phi.with_knob(knob_value)
        rng = np.random.default_rng(mc_seed)
        if kind == "D":
            est = expected_degree_count(
                s, probe, measure, index, outer_samples, inner_samples, rng
            )
        else:
            est = expected_k_components(
                s, probe, measure, index, outer_samples, inner_samples, rng=rng
            )
        return est.value

    lo, hi = phi.knob_bracket(measure)
    f_lo = expectation(lo) - target_alpha
    f_hi = expectation(hi) - target_alpha
    if abs(f_lo) <= tolerance:
        return CalibrationResult(phi.knob, lo, f_lo + target_alpha, target_alpha, statistic, 0)
    if abs(f_hi) <= tolerance:
        return CalibrationResult(phi.knob, hi, f_hi + target_alpha, target_alpha, statistic, 0)
    if f_lo * f_hi > 0:
        raise CalibrationError(
            f"target {target_alpha} for {statistic} is not bracketed on "
            f"[{lo}, {hi}]: endpoint expectations {f_lo + target_alpha:.6g}, "
            f"{f_hi + target_alpha:.6g}"
        )
    value = 0.5 * (lo + hi)
    achieved = expectation(value)
    iterations = 1
    while abs(achieved - target_alpha) > tolerance:
        if iterations >= max_iterations or hi - lo < 1e-15 * max(1.0, abs(hi)):
            raise CalibrationError(
                f"calibration stalled after {iterations} iterations at "
                f"{phi.knob} = {value:.12g} (achieved {achieved:.6g}, "
                f"target {target_alpha:.6g}, tolerance {tolerance:g})"
            )
        if (achieved - target_alpha) * f_lo > 0:
            lo = value
        else:
            hi = value
        value = 0.5 * (lo + hi)
        achieved = expectation(value)
        iterations += 1
    return CalibrationResult(
        phi.knob, float(value), float(achieved), float(target_alpha), statistic, iterations
    )


def _parse_statistic(statistic: str) -> tuple[str, int]:
    if len(statistic) < 2 or statistic[0] not in _STAT_KINDS:
        raise DomainError(
            f"statistic must look like D0, D3 or N2, got {statistic!r}"
        )
    try:
        index = int(statistic[1:])
    except ValueError:
        raise DomainError(f"statistic index in {statistic!r} is not an integer") from None
    if statistic[0] == "D" and not 0 <= index <= DEGREE_MAX:
        raise CapabilityError(f"degree statistics support j <= {DEGREE_MAX}, got {index}")
    if statistic[0] == "N" and not 1 <= index <= COMPONENT_MAX:
        raise CapabilityError(f"component statistics support k <= {COMPONENT_MAX}, got {index}")
    return statistic[0], index


def degree_ratio_check(
    s: float,
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    i: int,
    outer_samples: int = 4000,
    inner_samples: Optional[int] = None,
    rng: Optional[Generator] = None,
    slack_sigmas: float = 3.0,
) -> DegreeRatioReport:
    """Check E D_i / E D_{i-1} against [eps * s * a_s / i, s * a_s / i].

    a_s is the supremum of the mean field g and eps its homogeneity ratio;
    both come from the family's closed forms when declared and from probe
    estimation otherwise.
    """
    if i < 1:
        raise DomainError(f"ratio check needs i >= 1, got {i}")
    rng = _rng_or_default(rng)
    e_hi = expected_degree_count(s, phi, measure, i, outer_samples, inner_samples, rng)
    e_lo = expected_degree_count(s, phi, measure, i - 1, outer_samples, inner_samples, rng)
    if e_lo.value <= 0.0:
        raise DomainError(f"E D_{i-1} vanishes; the ratio at i = {i} is undefined")
    ratio = e_hi.value / e_lo.value
    rel_var = 0.0
    if e_hi.value != 0.0:
        rel_var += (e_hi.std_error / e_hi.value) ** 2
    rel_var += (e_lo.std_error / e_lo.value) ** 2
    ratio_se = abs(ratio) * math.sqrt(rel_var)
    profile = phi.mean_field_profile(measure)
    if profile is not None:
        a_s = max(g for _, g in profile)
        eps = phi.exact_epsilon(measure)
        method = "closed-form"
    else:
        report = homogeneity(phi, measure, rng)
        a_s = report.sup_mean_field
        eps = report.epsilon_hat
        method = "monte-carlo"
    lower = eps * s * a_s / i
    upper = s * a_s / i
    # exact paths have zero SE; keep a rounding margin so a coinciding
    # envelope (eps = 1) cannot fail by one ulp
    slack = slack_sigmas * ratio_se + 64.0 * np.finfo(float).eps * max(abs(upper), 1.0)
    passed = (lower - slack) <= ratio <= (upper + slack)
    return DegreeRatioReport(
        i, float(ratio), float(ratio_se), float(lower), float(upper),
        float(eps), float(a_s), bool(passed), method,
    )
