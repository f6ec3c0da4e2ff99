"""State spaces and reference probability measures for point configurations.

A measure object bundles three things the rest of the package needs: a
sampler producing i.i.d. points as (n, d) arrays, a density functional, and
the metric of the underlying space (plain Euclidean, or the flat torus with
coordinate-wise minimal displacement mod 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator

from .errors import ConfigurationError, DomainError

MAX_DIMENSION = 8

SPACE_KINDS = ("unit-cube", "flat-torus", "euclidean-with-density")
DENSITY_KINDS = ("uniform", "isotropic-gaussian", "product-weibull", "user-tabulated")


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in dimension d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


class EuclideanMetric:
    """Ordinary Euclidean displacement and distance."""

    is_torus = False

    def displacement(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.displacement(x, y), axis=-1)


class TorusMetric:
    """Flat-torus metric on [0,1)^d.

    The displacement along each coordinate is the minimal signed
    displacement mod 1 (in [-1/2, 1/2)); the distance is its Euclidean norm.
    """

    is_torus = True

    def displacement(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.mod(diff + 0.5, 1.0) - 0.5

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.displacement(x, y), axis=-1)


@dataclass(frozen=True)
class MeasureEstimate:
    """A measure value with its uncertainty (std_error 0.0 on exact paths)."""

    value: float
    std_error: float
    method: str


class ProbabilityMeasure:
    """Base class: a probability measure on a d-dimensional state space."""

    space_kind: str
    density_kind: str

    def __init__(self, dimension: int):
        if not 1 <= int(dimension) <= MAX_DIMENSION:
            raise ConfigurationError(
                f"dimension must be in [1, {MAX_DIMENSION}], got {dimension}"
            )
        self.dimension = int(dimension)
        self.metric = TorusMetric() if self.space_kind == "flat-torus" else EuclideanMetric()

    def describe(self) -> dict:
        """Config-shaped summary of the measure (space, dimension, density)."""
        out = {
            "kind": self.space_kind,
            "dimension": self.dimension,
            "density": self.density_kind,
        }
        for extra in ("shape", "scale"):
            if hasattr(self, extra):
                out[extra] = getattr(self, extra)
        return out

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        """Draw n i.i.d. points, shape (n, dimension).

        Sampling is prefix-stable: with the same generator state, the first
        n rows of sample_points(m, rng) for m >= n equal sample_points(n, rng).
        """
        raise NotImplementedError

    def density(self, p: np.ndarray) -> float:
        """Density at p with respect to Lebesgue measure on the space."""
        raise NotImplementedError

    def ball_measure(
        self,
        center: np.ndarray,
        radius: float,
        rng: Optional[Generator] = None,
        samples: int = 100_000,
    ) -> MeasureEstimate:
        """Measure of the closed metric ball around `center`.

        Closed forms where available (torus-uniform with radius <= 1/2,
        one-dimensional cube); otherwise plain Monte-Carlo from the measure
        itself, with the standard error reported.
        """
        if radius < 0:
            raise DomainError(f"radius must be nonnegative, got {radius}")
        exact = self._ball_measure_exact(center, radius)
        if exact is not None:
            return MeasureEstimate(exact, 0.0, "closed-form")
        if rng is None:
            rng = np.random.default_rng(0)
        pts = self.sample_points(int(samples), rng)
        hits = self.metric.distance(pts, np.asarray(center, dtype=float)) <= radius
        p_hat = float(np.mean(hits))
        se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / samples)
        return MeasureEstimate(p_hat, se, "monte-carlo")

    def _ball_measure_exact(self, center: np.ndarray, radius: float) -> Optional[float]:
        return None


class UniformCube(ProbabilityMeasure):
    """Uniform measure on the unit cube [0,1)^d."""

    space_kind = "unit-cube"
    density_kind = "uniform"

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        return rng.random((n, self.dimension))

    def density(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise DomainError(f"point {p} lies outside the unit cube")
        return 1.0

    def _ball_measure_exact(self, center: np.ndarray, radius: float) -> Optional[float]:
        if radius == 0.0:
            return 0.0
        if self.dimension == 1:
            c = float(np.asarray(center, dtype=float).reshape(()))
            return max(0.0, min(1.0, c + radius) - max(0.0, c - radius))
        return None


class UniformTorus(ProbabilityMeasure):
    """Uniform measure on the flat torus [0,1)^d."""

    space_kind = "flat-torus"
    density_kind = "uniform"

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        return rng.random((n, self.dimension))

    def density(self, p: np.ndarray) -> float:
        return 1.0

    def _ball_measure_exact(self, center: np.ndarray, radius: float) -> Optional[float]:
        if radius == 0.0:
            return 0.0
        if radius <= 0.5:
            return min(1.0, unit_ball_volume(self.dimension) * radius**self.dimension)
        return None


class IsotropicGaussian(ProbabilityMeasure):
    """Standard isotropic Gaussian on R^d."""

    space_kind = "euclidean-with-density"
    density_kind = "isotropic-gaussian"

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        return rng.standard_normal((n, self.dimension))

    def density(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        return float((2.0 * math.pi) ** (-self.dimension / 2) * np.exp(-0.5 * np.sum(p * p)))


class ProductWeibull(ProbabilityMeasure):
    """Product of i.i.d. Weibull(shape, scale) coordinates on [0, inf)^d."""

    space_kind = "euclidean-with-density"
    density_kind = "product-weibull"

    def __init__(self, dimension: int, shape: float, scale: float):
        if shape <= 0 or scale <= 0:
            raise ConfigurationError(
                f"weibull shape and scale must be positive, got {shape}, {scale}"
            )
        super().__init__(dimension)
        self.shape = float(shape)
        self.scale = float(scale)

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        return self.scale * rng.weibull(self.shape, size=(n, self.dimension))

    def density(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0):
            raise DomainError(f"point {p} lies outside the support [0, inf)^d")
        k, lam = self.shape, self.scale
        z = p / lam
        with np.errstate(divide="ignore"):
            vals = (k / lam) * z ** (k - 1.0) * np.exp(-(z**k))
        return float(np.prod(vals))


class TabulatedDensity(ProbabilityMeasure):
    """Piecewise-constant density on a regular grid over [0,1)^d.

    `values` holds nonnegative cell weights, shape (m,)*d; they are
    normalized to a probability density.  NaN marks a cell where the user's
    table is undefined; such cells carry no mass and density lookups inside
    them fail.
    """

    density_kind = "user-tabulated"

    def __init__(self, dimension: int, values: np.ndarray, torus: bool = False):
        self.space_kind = "flat-torus" if torus else "unit-cube"
        super().__init__(dimension)
        values = np.asarray(values, dtype=float)
        if values.ndim != self.dimension:
            raise ConfigurationError(
                f"tabulated values must have {self.dimension} axes, got {values.ndim}"
            )
        if values.shape.count(values.shape[0]) != values.ndim:
            raise ConfigurationError("tabulated grid must be square along every axis")
        finite = np.nan_to_num(values, nan=0.0)
        if np.any(finite < 0.0):
            raise ConfigurationError("tabulated densities must be nonnegative")
        total = finite.sum()
        if total <= 0.0:
            raise ConfigurationError("tabulated density has no mass")
        self.values = values
        self._cell_prob = (finite / total).ravel()
        self._m = values.shape[0]
        self._density_scale = self._m**self.dimension / total

    def sample_points(self, n: int, rng: Generator) -> np.ndarray:
        cells = rng.choice(self._cell_prob.size, size=n, p=self._cell_prob)
        corners = np.stack(
            np.unravel_index(cells, self.values.shape), axis=-1
        ).astype(float)
        return (corners + rng.random((n, self.dimension))) / self._m

    def _cell_index(self, p: np.ndarray) -> tuple:
        p = np.asarray(p, dtype=float)
        if self.space_kind == "flat-torus":
            p = np.mod(p, 1.0)
        elif np.any(p < 0.0) or np.any(p >= 1.0):
            raise DomainError(f"point {p} lies outside the tabulated grid")
        idx = np.minimum((p * self._m).astype(int), self._m - 1)
        return tuple(idx)

    def density(self, p: np.ndarray) -> float:
        v = self.values[self._cell_index(p)]
        if not np.isfinite(v):
            raise DomainError(f"tabulated density is undefined at {np.asarray(p)}")
        return float(v * self._density_scale)


def build_measure(
    space_kind: str,
    dimension: int,
    density_kind: str = "uniform",
    **params,
) -> ProbabilityMeasure:
    """Construct a measure from config-level names, validating combinations."""
    if space_kind not in SPACE_KINDS:
        raise ConfigurationError(f"unknown space kind {space_kind!r}; expected one of {SPACE_KINDS}")
    if density_kind not in DENSITY_KINDS:
        raise ConfigurationError(
            f"unknown density {density_kind!r}; expected one of {DENSITY_KINDS}"
        )
    if space_kind in ("unit-cube", "flat-torus"):
        if density_kind == "uniform":
            cls = UniformCube if space_kind == "unit-cube" else UniformTorus
            return cls(dimension)
        if density_kind == "user-tabulated":
            if "values" not in params:
                raise ConfigurationError("user-tabulated density requires a `values` table")
            return TabulatedDensity(
                dimension, np.asarray(params["values"], dtype=float),
                torus=space_kind == "flat-torus",
            )
        raise ConfigurationError(f"density {density_kind!r} is not supported on {space_kind}")
    # euclidean-with-density
    if density_kind == "isotropic-gaussian":
        return IsotropicGaussian(dimension)
    if density_kind == "product-weibull":
        return ProductWeibull(
            dimension, params.get("shape", 1.0), params.get("scale", 1.0)
        )
    raise ConfigurationError(
        f"density {density_kind!r} is not supported on euclidean-with-density"
    )
