"""Laws on nonnegative integers and the comparisons the harness reports.

Total variation distance is computed as half the L1 distance between
probability mass functions (equivalently the supremum over sets), with any
truncated tail folded into one overflow cell; the Wasserstein distance is
the L1 distance between distribution functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator
from scipy.special import gammaln

from .errors import DomainError

_TAIL_EPS = 1e-12


def poisson_pmf(j: np.ndarray | int, lam: np.ndarray | float) -> np.ndarray | float:
    """Poisson(lam) mass at j, stable for vector inputs (including lam = 0)."""
    j_arr = np.asarray(j)
    lam_arr = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pmf = j_arr * np.log(lam_arr) - lam_arr - gammaln(j_arr + 1.0)
        out = np.where(lam_arr > 0.0, np.exp(log_pmf), np.where(j_arr == 0, 1.0, 0.0))
    if np.ndim(j) == 0 and np.ndim(lam) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CountDistribution:
    """A law on {0, 1, 2, ...} stored as an explicit pmf plus folded tail mass."""

    pmf: np.ndarray
    tail_mass: float
    kind: str
    samples: Optional[int] = None

    @property
    def support_end(self) -> int:
        return int(self.pmf.size)

    def mean(self) -> float:
        ks = np.arange(self.pmf.size)
        return float(np.sum(ks * self.pmf))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)


def poisson_law(alpha: float, cutoff: Optional[int] = None) -> CountDistribution:
    """Poisson(alpha) truncated where the tail drops below 1e-12.

    The folded tail keeps distance computations exact to that resolution.
    """
    if alpha < 0:
        raise DomainError(f"poisson parameter must be nonnegative, got {alpha}")
    if alpha == 0.0:
        return CountDistribution(np.array([1.0]), 0.0, "poisson")
    if cutoff is None:
        spread = 12.0 * math.sqrt(alpha) + 30.0
        cutoff = int(alpha + spread)
    ks = np.arange(cutoff + 1)
    pmf = np.asarray(poisson_pmf(ks, alpha))
    tail = max(0.0, 1.0 - float(pmf.sum()))
    # extend if the requested cutoff left too much mass outside
    while tail > _TAIL_EPS and cutoff < 10_000_000:
        cutoff *= 2
        ks = np.arange(cutoff + 1)
        pmf = np.asarray(poisson_pmf(ks, alpha))
        tail = max(0.0, 1.0 - float(pmf.sum()))
    return CountDistribution(pmf, tail, "poisson")


def empirical_law(samples: Sequence[int] | np.ndarray) -> CountDistribution:
    values = np.asarray(samples)
    if values.size == 0:
        raise DomainError("empirical law needs at least one sample")
    if np.any(values < 0):
        raise DomainError("count samples must be nonnegative")
    counts = np.bincount(values.astype(np.int64))
    return CountDistribution(counts / values.size, 0.0, "empirical", samples=values.size)


def _aligned(p: CountDistribution, q: CountDistribution) -> tuple[np.ndarray, np.ndarray]:
    size = max(p.pmf.size, q.pmf.size)
    a = np.zeros(size)
    b = np.zeros(size)
    a[: p.pmf.size] = p.pmf
    b[: q.pmf.size] = q.pmf
    return a, b


def tv_distance(p: CountDistribution, q: CountDistribution) -> float:
    """Total variation distance; truncated tails meet in one overflow cell."""
    a, b = _aligned(p, q)
    return float(0.5 * (np.abs(a - b).sum() + abs(p.tail_mass - q.tail_mass)))


def wasserstein_distance(p: CountDistribution, q: CountDistribution) -> float:
    """L1 distance between the distribution functions on {0, 1, 2, ...}."""
    a, b = _aligned(p, q)
    return float(np.abs(np.cumsum(a) - np.cumsum(b)).sum())


def factorial_moment(samples: Sequence[int] | np.ndarray, ell: int) -> tuple[float, float]:
    """Mean falling factorial (x)_ell = x(x-1)...(x-ell+1) with standard error."""
    if ell < 1:
        raise DomainError(f"factorial moment order must be positive, got {ell}")
    x = np.asarray(samples, dtype=float)
    prod = np.ones_like(x)
    for i in range(ell):
        prod = prod * (x - i)
    value = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
    return value, se


@dataclass(frozen=True)
class BootstrapCI:
    """Percentile bootstrap interval for an empirical distance."""

    point: float
    lower: float
    upper: float
    resamples: int
    level: float


def bootstrap_tv_ci(
    samples: Sequence[int] | np.ndarray,
    target: CountDistribution,
    resamples: int = 200,
    level: float = 0.95,
    rng: Optional[Generator] = None,
) -> BootstrapCI:
    """Nonparametric bootstrap CI for d_TV(empirical law, fixed target law)."""
    if rng is None:
        rng = np.random.default_rng(0)
    values = np.asarray(samples).astype(np.int64)
    n = values.size
    counts = np.bincount(values)
    point = tv_distance(empirical_law(values), target)
    probs = counts / n
    draws = rng.multinomial(n, probs, size=resamples)
    size = max(counts.size, target.pmf.size)
    t = np.zeros(size)
    t[: target.pmf.size] = target.pmf
    stats = np.empty(resamples)
    for b in range(resamples):
        e = np.zeros(size)
        e[: counts.size] = draws[b] / n
        stats[b] = 0.5 * (np.abs(e - t).sum() + target.tail_mass)
    lo, hi = np.quantile(stats, [(1 - level) / 2, 1 - (1 - level) / 2])
    return BootstrapCI(point, float(lo), float(hi), resamples, level)


def gaussian_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class NormalityReport:
    """Empirical CDF of standardized counts at fixed z points vs the Gaussian."""

    alpha_hat: float
    z_points: tuple[float, ...]
    empirical_cdf: tuple[float, ...]
    empirical_cdf_strict: tuple[float, ...]
    targets: tuple[float, ...]
    degenerate: bool

    def max_abs_error(self) -> float:
        return max(abs(e - t) for e, t in zip(self.empirical_cdf, self.targets))


def normality_diagnostic(
    samples: Sequence[int] | np.ndarray,
    alpha_hat: Optional[float] = None,
    z_points: Sequence[float] = (-1.0, 0.0, 1.0),
) -> NormalityReport:
    """Compare standardized counts (x - alpha)/sqrt(alpha) with the Gaussian CDF.

    Both weak and strict empirical CDF values are reported; they differ
    visibly when the law has atoms, e.g. for constant samples the pair at
    z = 0 is (1, 0) and the report is flagged degenerate.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("normality diagnostic needs samples")
    if alpha_hat is None:
        alpha_hat = float(x.mean())
    degenerate = bool(np.all(x == x[0]) or alpha_hat <= 0.0)
    scale = math.sqrt(alpha_hat) if alpha_hat > 0 else 1.0
    z = (x - alpha_hat) / scale
    emp = tuple(float(np.mean(z <= zp)) for zp in z_points)
    emp_strict = tuple(float(np.mean(z < zp)) for zp in z_points)
    targets = tuple(gaussian_cdf(zp) for zp in z_points)
    return NormalityReport(
        float(alpha_hat), tuple(z_points), emp, emp_strict, targets, degenerate
    )
