"""Per-graph observables: degree counts, component counts, clump counts.

Naming used throughout the package: D_j is the number of vertices of degree
exactly j, N_k the number of connected components with exactly k vertices,
and H_k the number of connected induced subgraphs on k vertices (so H_2 is
the edge count and N_k <= H_k always).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapabilityError, DomainError
from .marked_sampler import Graph

HK_MAX = 5


@dataclass(frozen=True)
class DegreeHistogram:
    """Degree counts: counts[j] = number of vertices with degree j."""

    vertex_total: int
    counts: np.ndarray

    def count(self, j: int) -> int:
        if j < 0:
            raise DomainError(f"degree must be nonnegative, got {j}")
        if j >= self.counts.size:
            return 0
        return int(self.counts[j])


@dataclass(frozen=True)
class ComponentSummary:
    """Component-size counts: size_counts[k] = number of components on k vertices."""

    vertex_total: int
    component_total: int
    size_counts: np.ndarray

    def count(self, k: int) -> int:
        if k < 1:
            raise DomainError(f"component size must be positive, got {k}")
        if k >= self.size_counts.size:
            return 0
        return int(self.size_counts[k])


def degree_counts(graph: Graph) -> DegreeHistogram:
    degrees = graph.degrees()
    counts = np.bincount(degrees) if degrees.size else np.zeros(1, dtype=np.int64)
    return DegreeHistogram(graph.n_vertices, counts.astype(np.int64))


def component_counts(graph: Graph) -> ComponentSummary:
    n = graph.n_vertices
    if n == 0:
        return ComponentSummary(0, 0, np.zeros(1, dtype=np.int64))
    if graph.n_edges == 0:
        sizes = np.zeros(2, dtype=np.int64)
        sizes[1] = n
        return ComponentSummary(n, n, sizes)
    ones = np.ones(graph.n_edges, dtype=np.int8)
    adj = coo_matrix((ones, (graph.edges[:, 0], graph.edges[:, 1])), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=False)
    comp_sizes = np.bincount(labels)
    size_counts = np.bincount(comp_sizes, minlength=2)
    return ComponentSummary(n, int(n_comp), size_counts.astype(np.int64))


def _adjacency_sets(graph: Graph) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(graph.n_vertices)]
    for i, j in graph.edges:
        adj[int(i)].add(int(j))
        adj[int(j)].add(int(i))
    return adj


def connected_induced_count(graph: Graph, k: int) -> int:
    """Number of k-vertex subsets inducing a connected subgraph (k <= 5).

    Counts by anchored extension: subsets are grown from their smallest
    vertex using only higher-numbered vertices reachable from the current
    subset, so each connected subset is produced exactly once.
    """
    if k < 1:
        raise DomainError(f"subgraph order must be positive, got {k}")
    if k > HK_MAX:
        raise CapabilityError(f"connected_induced_count handles k <= {HK_MAX}, got {k}")
    if k == 1:
        return graph.n_vertices
    if k == 2:
        return graph.n_edges
    adj = _adjacency_sets(graph)
    total = 0

    def extend(size: int, extension: set[int], anchor: int, closed_nbhd: set[int]) -> None:
        nonlocal total
        if size == k:
            total += 1
            return
        ext = set(extension)
        while ext:
            w = ext.pop()
            exclusive = {u for u in adj[w] if u > anchor and u not in closed_nbhd}
            extend(size + 1, ext | exclusive, anchor, closed_nbhd | adj[w])

    for v in range(graph.n_vertices):
        seed_ext = {u for u in adj[v] if u > v}
        extend(1, seed_ext, v, adj[v] | {v})
    return total


def brute_force_connected_count(graph: Graph, k: int) -> int:
    """Reference implementation: test every k-subset (small graphs only)."""
    import itertools

    n = graph.n_vertices
    adj = _adjacency_sets(graph)
    total = 0
    for subset in itertools.combinations(range(n), k):
        members = set(subset)
        seen = {subset[0]}
        frontier = [subset[0]]
        while frontier:
            u = frontier.pop()
            for w in adj[u] & members:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        total += len(seen) == k
    return total
