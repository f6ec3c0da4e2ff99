"""Connection functions: symmetric edge-probability kernels on a state space.

Each family evaluates phi(x, y) vectorized over point arrays and advertises
what it knows exactly: its supremum, a compact support radius (for neighbor
acceleration), whether it is {0,1}-valued, and closed forms for the mean
field g(x) = integral of phi(x, .) against the reference measure where the
(family, measure) pair admits one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.random import Generator

from .errors import CapabilityError, ConfigurationError, DomainError
from .statespace import (
    ProbabilityMeasure,
    TorusMetric,
    EuclideanMetric,
    unit_ball_volume,
)

ENUMERATE_MAX = 5
RECURSION_MAX = 14


class ConnectionFunction:
    """Base class for symmetric kernels phi: X x X -> [0,1]."""

    family: str
    #: distance beyond which phi vanishes (None: unbounded or not distance based)
    support_radius: Optional[float] = None
    #: True when phi only takes the values 0 and 1
    is_indicator: bool = False
    #: name of the scalar calibration knob, if the family has one
    knob: Optional[str] = None

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> float:
        """phi at a single pair of points."""
        return float(self.evaluate_pairs(np.asarray(x)[None, :], np.asarray(y)[None, :])[0])

    def evaluate_pairs(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """phi on broadcast point arrays of shape (..., d) -> probabilities (...)."""
        raise NotImplementedError

    def sup_value(self) -> float:
        """Supremum of phi over all pairs (exact per family)."""
        raise NotImplementedError

    def constant_mean_field(self, measure: ProbabilityMeasure) -> Optional[float]:
        """Exact g when g(x) is constant under `measure`, else None."""
        return None

    def mean_field_profile(
        self, measure: ProbabilityMeasure
    ) -> Optional[list[tuple[float, float]]]:
        """Exact (weight, g-value) pieces when g takes finitely many values."""
        g = self.constant_mean_field(measure)
        if g is not None:
            return [(1.0, g)]
        return None

    def exact_epsilon(self, measure: ProbabilityMeasure) -> Optional[float]:
        """Exact homogeneity ratio inf g / sup g when known."""
        profile = self.mean_field_profile(measure)
        if profile:
            gs = [g for _, g in profile]
            lo, hi = min(gs), max(gs)
            return 1.0 if hi == 0.0 else lo / hi
        return None

    def probe_points(self, measure: ProbabilityMeasure) -> np.ndarray:
        """Family-suggested extreme probe points for homogeneity scans."""
        return np.empty((0, measure.dimension))

    def with_knob(self, value: float) -> "ConnectionFunction":
        raise CapabilityError(f"family {self.family!r} has no calibration knob")

    def knob_bracket(self, measure: ProbabilityMeasure) -> tuple[float, float]:
        raise CapabilityError(f"family {self.family!r} has no calibration knob")

    def describe(self) -> dict:
        """Config-shaped summary of the kernel (family plus parameters)."""
        out = {"family": self.family}
        for name in ("p", "r", "amplitude", "a", "gamma", "cap", "s"):
            if hasattr(self, name):
                out[name] = getattr(self, name)
        return out


class Constant(ConnectionFunction):
    """phi(x, y) = p regardless of positions."""

    family = "constant"
    knob = "p"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"constant kernel needs p in [0,1], got {p}")
        self.p = float(p)
        self.is_indicator = p in (0.0, 1.0)

    def evaluate_pairs(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(X)[:-1], np.shape(Y)[:-1])
        return np.full(shape, self.p)

    def sup_value(self) -> float:
        return self.p

    def constant_mean_field(self, measure: ProbabilityMeasure) -> Optional[float]:
        return self.p

    def with_knob(self, value: float) -> "Constant":
        return Constant(value)

    def knob_bracket(self, measure: ProbabilityMeasure) -> tuple[float, float]:
        return (0.0, 1.0)


class _RadialKernel(ConnectionFunction):
    """Shared plumbing for kernels that depend on the metric distance only."""

    def __init__(self, metric=None):
        self.metric = metric if metric is not None else EuclideanMetric()

    def _radial(self, dist: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate_pairs(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self._radial(self.metric.distance(X, Y))


class HardDisk(_RadialKernel):
    """phi = 1 within distance r, 0 beyond (a geometric random graph kernel)."""

    family = "hard-disk"
    is_indicator = True
    knob = "r"

    def __init__(self, r: float, metric=None):
        if r < 0:
            raise ConfigurationError(f"hard-disk radius must be nonnegative, got {r}")
        super().__init__(metric)
        self.r = float(r)
        self.support_radius = self.r

    def _radial(self, dist: np.ndarray) -> np.ndarray:
        return (dist <= self.r).astype(float)

    def sup_value(self) -> float:
        return 1.0 if self.r > 0 else 0.0

    def constant_mean_field(self, measure: ProbabilityMeasure) -> Optional[float]:
        if measure.space_kind == "flat-torus" and measure.density_kind == "uniform":
            if self.r <= 0.5:
                return unit_ball_volume(measure.dimension) * self.r**measure.dimension
        return None

    def with_knob(self, value: float) -> "HardDisk":
        return HardDisk(value, self.metric)

    def knob_bracket(self, measure: ProbabilityMeasure) -> tuple[float, float]:
        return (0.0, 0.5) if measure.space_kind == "flat-torus" else (0.0, math.sqrt(measure.dimension))


class SoftDisk(_RadialKernel):
    """phi = p within distance r, 0 beyond."""

    family = "soft-disk"
    knob = "p"

    def __init__(self, p: float, r: float, metric=None):
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"soft-disk needs p in [0,1], got {p}")
        if r < 0:
            raise ConfigurationError(f"soft-disk radius must be nonnegative, got {r}")
        super().__init__(metric)
        self.p = float(p)
        self.r = float(r)
        self.support_radius = self.r
        self.is_indicator = p in (0.0, 1.0)

    def _radial(self, dist: np.ndarray) -> np.ndarray:
        return np.where(dist <= self.r, self.p, 0.0)

    def sup_value(self) -> float:
        return self.p if self.r > 0 else 0.0

    def constant_mean_field(self, measure: ProbabilityMeasure) -> Optional[float]:
        if measure.space_kind == "flat-torus" and measure.density_kind == "uniform":
            if self.r <= 0.5:
                return self.p * unit_ball_volume(measure.dimension) * self.r**measure.dimension
        return None

    def with_knob(self, value: float) -> "SoftDisk":
        return SoftDisk(value, self.r, self.metric)

    def knob_bracket(self, measure: ProbabilityMeasure) -> tuple[float, float]:
        return (0.0, 1.0)


class RayleighProfile(_RadialKernel):
    """phi = amplitude * exp(-(dist/r)^2): a smooth, everywhere-positive profile."""

    family = "rayleigh"
    knob = "amplitude"

    def __init__(self, r: float, amplitude: float = 1.0, metric=None):
        if r <= 0:
            raise ConfigurationError(f"rayleigh range must be positive, got {r}")
        if not 0.0 <= amplitude <= 1.0:
            raise ConfigurationError(f"rayleigh amplitude must be in [0,1], got {amplitude}")
        super().__init__(metric)
        self.r = float(r)
        self.amplitude = float(amplitude)

    def _radial(self, dist: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-((dist / self.r) ** 2))

    def sup_value(self) -> float:
        return self.amplitude

    def constant_mean_field(self, measure: ProbabilityMeasure) -> Optional[float]:
        if measure.space_kind == "flat-torus" and measure.density_kind == "uniform":
            # One-dimensional Gaussian mass over a period, raised to the dimension.
            one_d = self.r * math.sqrt(math.pi) * math.erf(0.5 / self.r)
            return self.amplitude * one_d**measure.dimension
        return None

    def with_knob(self, value: float) -> "RayleighProfile":
        return RayleighProfile(self.r, value, self.metric)

    def knob_bracket(self, measure: ProbabilityMeasure) -> tuple[float, float]:
        return (0.0, 1.0)


class CappedInversePower(_RadialKernel):
    """phi = min(a * dist^-gamma, cap): a long-range kernel truncated at cap."""

    family = "capped-inverse-power"

    def __init__(self, a: float, gamma: float, cap: float = 1.0, metric=None):
        if a <= 0 or gamma <= 0:
            raise ConfigurationError(
                f"capped-inverse-power needs positive a and gamma, got {a}, {gamma}"
            )
        if not 0.0 < cap <= 1.0:
            raise ConfigurationError(f"cap must be in (0,1], got {cap}")
        super().__init__(metric)
        self.a = float(a)
        self.gamma = float(gamma)
        self.cap = float(cap)

    def _radial(self, dist: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            raw = self.a * np.asarray(dist, dtype=float) ** (-self.gamma)
        return np.minimum(raw, self.cap)

    def sup_value(self) -> float:
        return self.cap


class PartitionBlocks(ConnectionFunction):
    """Two-block kernel on the unit interval: connect iff on the same side of 1/s.

    With intensity matched to the block parameter s, the small block [0, 1/s]
    holds on average one point, so the isolated-vertex count converges to a
    Bernoulli rather than a Poisson law; the family exists to exhibit how
    badly degree counts can miss the Poisson limit without a homogeneity
    floor.
    """

    family = "partition-blocks"
    is_indicator = True

    def __init__(self, s: float):
        if s <= 1:
            raise ConfigurationError(f"partition parameter must exceed 1, got {s}")
        self.s = float(s)
        self.cut = 1.0 / float(s)

    def evaluate_pairs(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        a = np.asarray(X, dtype=float)[..., 0] <= self.cut
        b = np.asarray(Y, dtype=float)[..., 0] <= self.cut
        return (a == b).astype(float)

    def sup_value(self) -> float:
        return 1.0

    def mean_field_profile(
        self, measure: ProbabilityMeasure
    ) -> Optional[list[tuple[float, float]]]:
        if (
            measure.space_kind in ("unit-cube", "flat-torus")
            and measure.density_kind == "uniform"
            and measure.dimension == 1
        ):
            c = self.cut
            return [(c, c), (1.0 - c, 1.0 - c)]
        return None

    def probe_points(self, measure: ProbabilityMeasure) -> np.ndarray:
        c = self.cut
        return np.array([[0.5 * c], [0.5 * (1.0 + c)]])


FAMILIES = (
    "constant",
    "hard-disk",
    "soft-disk",
    "rayleigh",
    "capped-inverse-power",
    "partition-blocks",
)


def make_connection(
    family: str, params: dict, measure: Optional[ProbabilityMeasure] = None
) -> ConnectionFunction:
    """Build a kernel from config-level names, binding the space's metric."""
    metric = measure.metric if measure is not None else EuclideanMetric()
    try:
        if family == "constant":
            return Constant(params["p"])
        if family == "hard-disk":
            return HardDisk(params["r"], metric)
        if family == "soft-disk":
            return SoftDisk(params["p"], params["r"], metric)
        if family == "rayleigh":
            return RayleighProfile(params["r"], params.get("amplitude", 1.0), metric)
        if family == "capped-inverse-power":
            return CappedInversePower(
                params["a"], params["gamma"], params.get("cap", 1.0), metric
            )
        if family == "partition-blocks":
            return PartitionBlocks(params["s"])
    except KeyError as missing:
        raise ConfigurationError(f"family {family!r} is missing parameter {missing}") from None
    raise ConfigurationError(f"unknown connection family {family!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# Group connection probabilities


def group_connect_prob(
    phi: ConnectionFunction, xs: np.ndarray, ys: np.ndarray
) -> float:
    """Probability that at least one edge crosses between two point groups.

    Equals 1 - prod over all cross pairs of (1 - phi(x, y)), the connection
    probability of the induced kernel on grouped points.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    probs = phi.evaluate_pairs(xs[:, None, :], ys[None, :, :])
    return float(1.0 - np.prod(1.0 - probs))


def no_cross_edge_prob(
    phi: ConnectionFunction, groups: Sequence[np.ndarray]
) -> float:
    """Probability that no edge crosses between any two of the given groups."""
    value = 1.0
    for a, b in itertools.combinations(range(len(groups)), 2):
        value *= 1.0 - group_connect_prob(phi, groups[a], groups[b])
    return float(value)


# ---------------------------------------------------------------------------
# Connectedness probability of the random graph on k fixed points


@lru_cache(maxsize=8)
def _edge_subset_tables(k: int) -> tuple[np.ndarray, np.ndarray]:
    """All edge subsets on k labeled vertices and their connectivity flags.

    Returns (bits, connected): bits has shape (2^E, E) over the
    lexicographic edge list from itertools.combinations(range(k), 2);
    connected marks masks whose graph joins all k vertices.
    """
    edges = list(itertools.combinations(range(k), 2))
    n_edges = len(edges)
    masks = np.arange(2**n_edges, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n_edges)) & 1
    connected = np.zeros(len(masks), dtype=bool)
    for m in masks:
        parent = list(range(k))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        joined = k
        for e, (u, v) in enumerate(edges):
            if (m >> e) & 1:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
                    joined -= 1
        connected[m] = joined == 1
    return bits.astype(bool), connected


def _pair_matrix(phi: ConnectionFunction, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return phi.evaluate_pairs(pts[:, None, :], pts[None, :, :])


def _connectedness_enumerate(pair_probs: np.ndarray) -> float:
    k = pair_probs.shape[0]
    bits, connected = _edge_subset_tables(k)
    iu, ju = np.triu_indices(k, 1)
    p = pair_probs[iu, ju]
    graph_probs = np.prod(np.where(bits, p, 1.0 - p), axis=1)
    return float(graph_probs[connected].sum())


def _connectedness_recursion(pair_probs: np.ndarray) -> float:
    k = pair_probs.shape[0]
    full = (1 << k) - 1
    # q[u, m]: probability u sends no edge into the vertex set encoded by m
    q = np.ones((k, full + 1))
    one_minus = 1.0 - pair_probs
    for u in range(k):
        for m in range(1, full + 1):
            low = (m & -m).bit_length() - 1
            q[u, m] = q[u, m & (m - 1)] * one_minus[u, low]
    conn = np.ones(full + 1)
    for s in range(1, full + 1):
        if s & (s - 1) == 0:
            continue  # single vertex: connected with probability 1
        root = s & -s
        rest = s ^ root
        total = 0.0
        # proper submasks t of s that contain the root vertex
        t_rest = (rest - 1) & rest
        while True:
            t = t_rest | root
            comp = s ^ t
            cross = 1.0
            tt = t
            while tt:
                u = (tt & -tt).bit_length() - 1
                cross *= q[u, comp]
                tt &= tt - 1
            total += conn[t] * cross
            if t_rest == 0:
                break
            t_rest = (t_rest - 1) & rest
        conn[s] = 1.0 - total
    return float(conn[full])


def _connectedness_monte_carlo(
    pair_probs: np.ndarray, samples: int, rng: Generator
) -> float:
    k = pair_probs.shape[0]
    iu, ju = np.triu_indices(k, 1)
    p = pair_probs[iu, ju]
    draws = rng.random((samples, p.size)) < p
    hits = 0
    for row in draws:
        parent = list(range(k))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        joined = k
        for e in np.flatnonzero(row):
            ru, rv = find(int(iu[e])), find(int(ju[e]))
            if ru != rv:
                parent[ru] = rv
                joined -= 1
        hits += joined == 1
    return hits / samples


def connectedness_prob(
    phi: ConnectionFunction,
    points: np.ndarray,
    method: str = "auto",
    mc_samples: int = 20_000,
    rng: Optional[Generator] = None,
) -> float:
    """Probability that the random graph on the given fixed points is connected.

    Methods: "enumerate" walks all edge subsets (k <= 5), "subset-recursion"
    uses the complement recursion over vertex subsets (k <= 14),
    "monte-carlo" samples edge indicators.  "auto" picks the cheapest exact
    method that applies, falling back to Monte-Carlo.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if k == 0:
        raise DomainError("connectedness needs at least one point")
    if k == 1:
        return 1.0
    pair_probs = _pair_matrix(phi, pts)
    if method == "auto":
        method = "enumerate" if k <= ENUMERATE_MAX else (
            "subset-recursion" if k <= RECURSION_MAX else "monte-carlo"
        )
    if method == "enumerate":
        if k > ENUMERATE_MAX:
            raise CapabilityError(f"enumerate handles k <= {ENUMERATE_MAX}, got {k}")
        return _connectedness_enumerate(pair_probs)
    if method == "subset-recursion":
        if k > RECURSION_MAX:
            raise CapabilityError(f"subset-recursion handles k <= {RECURSION_MAX}, got {k}")
        return _connectedness_recursion(pair_probs)
    if method == "monte-carlo":
        if rng is None:
            rng = np.random.default_rng(0)
        return _connectedness_monte_carlo(pair_probs, mc_samples, rng)
    raise ConfigurationError(f"unknown connectedness method {method!r}")


# ---------------------------------------------------------------------------
# Homogeneity diagnostics


@dataclass(frozen=True)
class HomogeneityReport:
    """Estimated spread of the mean field g and the kernel supremum."""

    epsilon_hat: float
    inf_mean_field: float
    sup_mean_field: float
    sup_phi: float
    probes: int
    method: str


def homogeneity(
    phi: ConnectionFunction,
    measure: ProbabilityMeasure,
    rng: Optional[Generator] = None,
    probes: int = 64,
    inner_samples: int = 4096,
) -> HomogeneityReport:
    """Estimate epsilon = inf_x g(x) / sup_x g(x) and report sup phi.

    Exact when the (family, measure) pair declares its mean-field profile;
    otherwise g is probed at measure samples plus family-suggested extreme
    points, each probe integrated by Monte-Carlo.
    """
    profile = phi.mean_field_profile(measure)
    if profile:
        gs = [g for _, g in profile]
        lo, hi = min(gs), max(gs)
        eps = 1.0 if hi == 0.0 else lo / hi
        return HomogeneityReport(eps, lo, hi, phi.sup_value(), len(gs), "closed-form")
    if rng is None:
        rng = np.random.default_rng(0)
    probe_pts = np.vstack([measure.sample_points(probes, rng), phi.probe_points(measure)])
    z = measure.sample_points(inner_samples, rng)
    g_hat = phi.evaluate_pairs(probe_pts[:, None, :], z[None, :, :]).mean(axis=1)
    lo, hi = float(g_hat.min()), float(g_hat.max())
    eps = 1.0 if hi == 0.0 else lo / hi
    return HomogeneityReport(eps, lo, hi, phi.sup_value(), len(probe_pts), "monte-carlo")
