"""Marked point configurations and the two equivalent graph constructions.

Every sampled point carries an infinite stream of i.i.d. uniform marks,
realized lazily through a counter-based PRF keyed by (configuration seed,
owner index).  Mark position 0 orders the points; position j+1 decides the
edge toward the point at index j.  Two builders consume the marks:

* build_graph_sequential pairs points in sampling-index order, so the graph
  on the first n points is an induced subgraph of the graph on the first
  m >= n points (prefix coupling).
* build_graph_ordered first sorts points by their position-0 mark and pairs
  in sorted order, which makes the result invariant under relabeling of the
  stored points.

Both produce the same distribution over graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .connection import ConnectionFunction
from .errors import ConfigurationError
from .prf import derive_key, mark_values, stream_keys
from .statespace import ProbabilityMeasure, TorusMetric

_TAG_COUNT = 0x5EED_0001
_TAG_POINTS = 0x5EED_0002
_TAG_MARKS = 0x5EED_0003

_PAIR_BLOCK = 256


@dataclass(frozen=True)
class MarkStream:
    """Lazy view of one point's mark sequence t_0, t_1, t_2, ..."""

    seed: int
    owner_index: int
    key: np.uint64

    def value_at(self, position: int) -> float:
        return float(mark_values(self.key, np.uint64(position)))

    def values(self, positions: np.ndarray) -> np.ndarray:
        return mark_values(self.key, np.asarray(positions, dtype=np.uint64))

    def prefix(self, n: int) -> np.ndarray:
        return self.values(np.arange(n, dtype=np.uint64))


@dataclass(frozen=True)
class MarkedConfiguration:
    """Points with aligned mark streams, plus how the configuration arose."""

    points: np.ndarray            # (n, d)
    mark_keys: np.ndarray         # (n,) uint64, identity of each mark stream
    seed: int
    process: str                  # "poisson" | "binomial" | "fixed"
    size_param: float

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    def mark_stream(self, i: int) -> MarkStream:
        return MarkStream(self.seed, i, np.uint64(self.mark_keys[i]))

    @property
    def marks(self) -> list[MarkStream]:
        return [self.mark_stream(i) for i in range(self.n_points)]

    def prefix(self, n: int) -> "MarkedConfiguration":
        """The configuration restricted to the first n sampled points."""
        return MarkedConfiguration(
            self.points[:n], self.mark_keys[:n], self.seed, self.process, self.size_param
        )

    def permuted(self, perm: np.ndarray) -> "MarkedConfiguration":
        """Relabeled storage order; each point keeps its own mark stream."""
        perm = np.asarray(perm)
        return MarkedConfiguration(
            self.points[perm], self.mark_keys[perm], self.seed, self.process, self.size_param
        )


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph on embedded vertices."""

    points: np.ndarray   # (n, d), in construction order
    edges: np.ndarray    # (m, 2) int64 with edges[:, 0] < edges[:, 1]

    @property
    def n_vertices(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices).astype(np.int64)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}


def _point_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(derive_key(seed, _TAG_POINTS))))


def _count_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(derive_key(seed, _TAG_COUNT))))


def sample_poisson_configuration(
    measure: ProbabilityMeasure, intensity: float, seed: int
) -> MarkedConfiguration:
    """Poisson configuration: count ~ Poisson(intensity), then i.i.d. points.

    The point stream is keyed independently of the count, so configurations
    with the same seed and different sizes share their leading points.
    """
    if not float(intensity) > 0.0:
        raise ConfigurationError(f"poisson intensity must be positive, got {intensity}")
    count = int(_count_rng(seed).poisson(float(intensity)))
    points = measure.sample_points(count, _point_rng(seed))
    keys = stream_keys(seed, _TAG_MARKS, count)
    return MarkedConfiguration(points, keys, seed, "poisson", float(intensity))


def sample_binomial_configuration(
    measure: ProbabilityMeasure, n: int, seed: int
) -> MarkedConfiguration:
    """Fixed-size configuration of n i.i.d. points, sharing the Poisson point stream."""
    if int(n) < 1:
        raise ConfigurationError(f"binomial point count must be positive, got {n}")
    points = measure.sample_points(int(n), _point_rng(seed))
    keys = stream_keys(seed, _TAG_MARKS, int(n))
    return MarkedConfiguration(points, keys, seed, "binomial", float(n))


def configuration_from_points(
    points: np.ndarray, seed: int = 0
) -> MarkedConfiguration:
    """Wrap explicit points in fresh mark streams (for tests and fixed layouts)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    keys = stream_keys(seed, _TAG_MARKS, pts.shape[0])
    return MarkedConfiguration(pts, keys, seed, "fixed", float(pts.shape[0]))


# ---------------------------------------------------------------------------
# Graph construction


def _tree_candidate_pairs(
    points: np.ndarray, radius: float, torus: bool
) -> tuple[np.ndarray, np.ndarray]:
    if torus:
        tree = cKDTree(np.mod(points, 1.0), boxsize=1.0)
    else:
        tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    return pairs[:, 0], pairs[:, 1]


def _edges_from_candidates(
    points: np.ndarray,
    keys: np.ndarray,
    i_arr: np.ndarray,
    j_arr: np.ndarray,
    phi: ConnectionFunction,
) -> np.ndarray:
    probs = phi.evaluate_pairs(points[i_arr], points[j_arr])
    if phi.is_indicator:
        mask = probs >= 1.0
    else:
        t = mark_values(keys[i_arr], (j_arr + 1).astype(np.uint64))
        mask = t <= probs
    out = np.stack([i_arr[mask], j_arr[mask]], axis=1)
    return out.astype(np.int64)


def _edges_all_pairs(
    points: np.ndarray, keys: np.ndarray, phi: ConnectionFunction
) -> np.ndarray:
    """Edge decisions over every pair, streamed in row blocks to bound memory.

    Each row block [a, b) splits its columns into the triangle part (a, b),
    which needs a column > row mask, and the rectangle part [b, n), which is
    valid wholesale.
    """
    n = points.shape[0]
    rows_out: list[np.ndarray] = []
    cols_out: list[np.ndarray] = []

    def decide(rows: np.ndarray, cols: np.ndarray, triangular: bool) -> None:
        probs = phi.evaluate_pairs(points[rows][:, None, :], points[cols][None, :, :])
        if phi.is_indicator:
            mask = probs >= 1.0
        else:
            t = mark_values(keys[rows][:, None], (cols + 1).astype(np.uint64)[None, :])
            mask = t <= probs
        if triangular:
            mask &= cols[None, :] > rows[:, None]
        ri, ci = np.nonzero(mask)
        rows_out.append(rows[ri])
        cols_out.append(cols[ci])

    for a in range(0, n - 1, _PAIR_BLOCK):
        b = min(a + _PAIR_BLOCK, n - 1)
        rows = np.arange(a, b)
        if b > a + 1:
            decide(rows, np.arange(a + 1, b), triangular=True)
        decide(rows, np.arange(b, n), triangular=False)
    if not rows_out:
        return np.empty((0, 2), dtype=np.int64)
    return np.stack(
        [np.concatenate(rows_out), np.concatenate(cols_out)], axis=1
    ).astype(np.int64)


def _build_edges(
    points: np.ndarray, keys: np.ndarray, phi: ConnectionFunction
) -> np.ndarray:
    n = points.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    radius = phi.support_radius
    if radius is not None and radius > 0.0:
        torus = isinstance(getattr(phi, "metric", None), TorusMetric)
        i_arr, j_arr = _tree_candidate_pairs(points, radius, torus)
        edges = _edges_from_candidates(points, keys, i_arr, j_arr, phi)
        # canonical row order for reproducible files
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        return edges[order]
    if radius is not None and radius == 0.0:
        return np.empty((0, 2), dtype=np.int64)
    return _edges_all_pairs(points, keys, phi)


def build_graph_ordered(
    config: MarkedConfiguration, phi: ConnectionFunction
) -> Graph:
    """Graph on points sorted by their position-0 mark.

    Vertex i of the result is the point with the i-th smallest ordering
    mark (ties broken by storage index); the edge toward vertex j > i is
    decided by mark position j+1 of vertex i's stream.  The construction
    does not depend on how the configuration is stored.
    """
    t0 = mark_values(config.mark_keys, np.uint64(0))
    order = np.argsort(t0, kind="stable")
    points = config.points[order]
    keys = config.mark_keys[order]
    return Graph(points, _build_edges(points, keys, phi))


def build_graph_sequential(
    config: MarkedConfiguration, phi: ConnectionFunction
) -> Graph:
    """Graph on points in sampling order; prefixes yield induced subgraphs."""
    return Graph(config.points, _build_edges(config.points, config.mark_keys, phi))
