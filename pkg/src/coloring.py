"""Distance-d colorings and lattice point counts.

Colors are 1-based. ``Coloring.directed`` records which graph mode the
certificate refers to; an undirected certificate also certifies the directed
graph since directed distances are never shorter.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError
from .graph import PatternGraph, bfs_distances, lattice_coordinates, within_distance
from .models import LatticeSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Coloring:
    color_of: np.ndarray
    classes: Tuple[np.ndarray, ...]
    certified_distance: int
    source: str
    directed: bool = False
    bandwidth: Optional[int] = None

    @property
    def n(self) -> int:
        return int(self.color_of.size)

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def class_sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.classes], dtype=np.int64)

    @property
    def class_of(self) -> np.ndarray:
        """0-based class index per node."""
        return self.color_of - 1

    def certifies(self, distance: int, directed: bool) -> bool:
        if distance > self.certified_distance:
            return False
        return directed or not self.directed


@dataclass(frozen=True)
class ColoringCheck:
    passed: bool
    witness: Optional[Tuple[int, int]] = None
    distance: Optional[int] = None


class SphereCount(NamedTuple):
    exact: int
    bound: int


def coloring_from_labels(labels, distance: int, source: str, directed: bool = False,
                         bandwidth: Optional[int] = None) -> Coloring:
    """Compact arbitrary labels to colors 1..m, dropping empty classes."""
    labels = np.asarray(labels)
    values, inverse = np.unique(labels, return_inverse=True)
    color_of = inverse.astype(np.int64).ravel() + 1
    order = np.argsort(color_of, kind="stable")
    counts = np.bincount(color_of, minlength=values.size + 1)[1:]
    classes = tuple(np.split(order, np.cumsum(counts)[:-1]))
    return Coloring(color_of=color_of, classes=classes, certified_distance=int(distance),
                    source=source, directed=directed, bandwidth=bandwidth)


def _check_order(order, n: int) -> np.ndarray:
    if order is None:
        return np.arange(n)
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ArgumentError("order must be a permutation of the nodes")
    return order


def _conflict_pattern(G: PatternGraph, d: int) -> sp.csr_matrix:
    reach = within_distance(G, d)
    if G.directed:
        reach = (reach + reach.T).tocsr()
    return reach


def greedy_coloring(G: PatternGraph, d: int, order: Optional[Sequence[int]] = None) -> Coloring:
    """Give each node, in ``order``, the smallest color unused within distance d."""
    if d < 1:
        raise ArgumentError(f"distance must be >= 1, got {d}")
    order = _check_order(order, G.n)
    reach = _conflict_pattern(G, d)
    colors = np.zeros(G.n, dtype=np.int64)
    for i in order:
        nbrs = reach.indices[reach.indptr[i]:reach.indptr[i + 1]]
        used = np.unique(colors[nbrs])
        used = used[used > 0]
        gaps = np.flatnonzero(used != np.arange(1, used.size + 1))
        colors[i] = gaps[0] + 1 if gaps.size else used.size + 1
    col = coloring_from_labels(colors, d, "greedy", directed=G.directed)
    logger.debug(f"Greedy distance-{d} coloring of {G.n} nodes: {col.m} colors (max degree {G.max_degree})")
    return col


def banded_coloring(n: int, beta: int, d: int, order: Optional[Sequence[int]] = None) -> Coloring:
    """Cyclic striping with d*beta + 1 colors along ``order``."""
    if n < 1 or beta < 1 or d < 1:
        raise ArgumentError(f"banded coloring needs n, beta, d >= 1, got {n}, {beta}, {d}")
    order = _check_order(order, n)
    labels = np.empty(n, dtype=np.int64)
    labels[order] = np.arange(n) % (d * beta + 1) + 1
    return coloring_from_labels(labels, d, "banded", directed=False, bandwidth=beta)


def lattice_coloring(spec: LatticeSpec, d: int) -> Coloring:
    """col(w) = sum_k (w_k mod (d+1)) (d+1)^k + 1 on a D-dimensional lattice."""
    if d < 1:
        raise ArgumentError(f"distance must be >= 1, got {d}")
    coords = lattice_coordinates(spec.dims)
    weights = (d + 1) ** np.arange(spec.D, dtype=np.int64)
    labels = (coords % (d + 1)) @ weights + 1
    return coloring_from_labels(labels, d, "lattice", directed=False)


def validate_coloring(G: PatternGraph, col: Coloring, d: Optional[int] = None) -> ColoringCheck:
    """Exhaustive check that same-colored nodes are more than d apart in either orientation."""
    d = col.certified_distance if d is None else d
    if col.n != G.n:
        raise ArgumentError(f"coloring covers {col.n} nodes, graph has {G.n}")
    reach = _conflict_pattern(G, d).tocoo()
    clash = (reach.row != reach.col) & (col.color_of[reach.row] == col.color_of[reach.col])
    if not clash.any():
        return ColoringCheck(passed=True)
    k = int(np.flatnonzero(clash)[0])
    i, j = int(reach.row[k]), int(reach.col[k])
    forward = int(bfs_distances(G, i, cap=d)[j])
    backward = int(bfs_distances(G, j, cap=d)[i])
    return ColoringCheck(passed=False, witness=(i, j), distance=min(forward, backward))


def lattice_ball_size(D: int, d: int) -> int:
    """Number of z in Z^D with ||z||_1 <= d."""
    if D < 1 or d < 0:
        raise ArgumentError(f"need D >= 1 and d >= 0, got D={D}, d={d}")
    return sum(math.comb(D, k) * math.comb(d + D - k, D) for k in range(D + 1))


def lattice_sphere_size(D: int, d: int) -> SphereCount:
    if D < 1 or d < 1:
        raise ArgumentError(f"need D >= 1 and d >= 1, got D={D}, d={d}")
    exact = lattice_ball_size(D, d) - lattice_ball_size(D, d - 1)
    return SphereCount(exact=exact, bound=2 * D * d ** (D - 1))
