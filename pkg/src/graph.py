"""Graph view of a sparsity pattern: geodesic distances, level sets, truncation, orderings."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, reverse_cuthill_mckee

from .errors import ArgumentError, DimensionError
from .sparse import as_sparse, require_square

logger = logging.getLogger(__name__)

INFINITY = np.uint32(2**32 - 1)
BEYOND_CAP = np.uint32(2**32 - 2)


@dataclass(frozen=True)
class PatternGraph:
    n: int
    # boolean CSR, row i lists the heads j of edges (i, j); no diagonal
    adjacency: sp.csr_matrix
    directed: bool

    def neighbors(self, i: int) -> np.ndarray:
        start, end = self.adjacency.indptr[i], self.adjacency.indptr[i + 1]
        return self.adjacency.indices[start:end]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.nnz)

    @property
    def max_degree(self) -> int:
        """Largest degree of the undirected view."""
        if self.n == 0:
            return 0
        sym = self.adjacency if not self.directed else (self.adjacency + self.adjacency.T).tocsr()
        return int(np.max(np.diff(sym.indptr)))

    def undirected(self) -> "PatternGraph":
        if not self.directed:
            return self
        return _from_boolean(self.adjacency + self.adjacency.T, directed=False)


@dataclass(frozen=True)
class LevelSets:
    source: int
    sizes: np.ndarray
    unreachable: int


@dataclass(frozen=True)
class Reordering:
    permutation: np.ndarray
    bandwidth_before: int
    bandwidth: int


def _from_boolean(P, directed: bool) -> PatternGraph:
    coo = sp.coo_matrix(P)
    keep = (coo.row != coo.col) & (coo.data != 0)
    n = P.shape[0]
    adjacency = sp.csr_matrix(
        (np.ones(int(keep.sum()), dtype=bool), (coo.row[keep], coo.col[keep])), shape=(n, n)
    )
    adjacency.sum_duplicates()
    adjacency.sort_indices()
    return PatternGraph(n=n, adjacency=adjacency, directed=directed)


def pattern_graph(A, directed: bool = True) -> PatternGraph:
    """Graph of the off-diagonal nonzero pattern; the undirected view uses the pattern union."""
    A = as_sparse(A)
    require_square(A)
    P = A != 0
    if not directed:
        P = P + P.T
    return _from_boolean(P, directed=directed)


def bfs_distances(G: PatternGraph, source: int, cap: Optional[int] = None) -> np.ndarray:
    """Geodesic distances from ``source`` as uint32.

    Unreachable nodes are INFINITY. With a cap the search stops after ``cap``
    levels; if it could still have advanced, every node reachable from
    ``source`` but not yet reached is BEYOND_CAP.
    """
    if not 0 <= source < G.n:
        raise ArgumentError(f"source {source} outside 0..{G.n - 1}")
    if cap is not None and cap < 0:
        raise ArgumentError(f"cap must be nonnegative, got {cap}")
    dist = np.full(G.n, INFINITY, dtype=np.uint32)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        candidates = np.unique(G.adjacency[frontier].indices)
        fresh = candidates[dist[candidates] == INFINITY]
        if fresh.size == 0:
            break
        if cap is not None and level >= cap:
            reachable = breadth_first_order(G.adjacency, source, directed=True, return_predecessors=False)
            pending = reachable[dist[reachable] == INFINITY]
            dist[pending] = BEYOND_CAP
            break
        level += 1
        dist[fresh] = level
        frontier = fresh
    return dist


def level_set_sizes(G: PatternGraph, source: int) -> LevelSets:
    dist = bfs_distances(G, source)
    reached = dist != INFINITY
    sizes = np.bincount(dist[reached].astype(np.int64))
    return LevelSets(source=source, sizes=sizes, unreachable=int(G.n - reached.sum()))


def within_distance(G: PatternGraph, radius: int) -> sp.csr_matrix:
    """Boolean pattern of {(i, j): d(i, j) <= radius}, diagonal included."""
    if radius < 0:
        raise ArgumentError(f"radius must be nonnegative, got {radius}")
    step = (G.adjacency.astype(np.int32) + sp.identity(G.n, dtype=np.int32, format="csr")).tocsr()
    reach = sp.identity(G.n, dtype=np.int32, format="csr")
    for _ in range(radius):
        grown = (reach @ step).tocsr()
        grown.data[:] = 1
        if grown.nnz == reach.nnz:
            break
        reach = grown
    reach = reach.astype(bool).tocsr()
    reach.sort_indices()
    return reach


def distance_truncate(B, G: PatternGraph, m: int) -> sp.csr_matrix:
    """Keep [B]_ij where d(i, j) <= m, zero elsewhere."""
    if B.shape != (G.n, G.n):
        raise DimensionError(f"matrix {B.shape} does not match graph on {G.n} nodes")
    keep = within_distance(G, m).tocoo()
    if sp.issparse(B):
        values = np.asarray(as_sparse(B)[keep.row, keep.col]).ravel()
    else:
        values = np.asarray(B, dtype=np.complex128)[keep.row, keep.col]
    return as_sparse(sp.coo_matrix((values, (keep.row, keep.col)), shape=B.shape))


def bandwidth(A: Union[PatternGraph, "sp.spmatrix"], permutation: Optional[Sequence[int]] = None) -> int:
    """Semi-bandwidth max |i - j| over the pattern, optionally after symmetric permutation."""
    M = A.adjacency if isinstance(A, PatternGraph) else sp.csr_matrix(A)
    coo = sp.coo_matrix(M)
    if coo.nnz == 0:
        return 0
    rows, cols = coo.row, coo.col
    if permutation is not None:
        position = np.empty(M.shape[0], dtype=np.int64)
        position[np.asarray(permutation)] = np.arange(M.shape[0])
        rows, cols = position[rows], position[cols]
    return int(np.max(np.abs(rows.astype(np.int64) - cols.astype(np.int64))))


def cuthill_mckee(G: PatternGraph) -> Reordering:
    """Reverse Cuthill-McKee order of an undirected pattern, component by component."""
    if G.directed:
        raise ArgumentError("cuthill_mckee needs an undirected graph")
    perm = np.asarray(reverse_cuthill_mckee(G.adjacency, symmetric_mode=True), dtype=np.int64)
    before, after = bandwidth(G), bandwidth(G, perm)
    logger.debug(f"RCM on {G.n} nodes: bandwidth {before} -> {after}")
    return Reordering(permutation=perm, bandwidth_before=before, bandwidth=after)


def _path(N: int) -> sp.csr_matrix:
    if N == 1:
        return sp.csr_matrix((1, 1))
    return sp.diags([np.ones(N - 1), np.ones(N - 1)], [-1, 1], shape=(N, N), format="csr")


def lattice_graph(dims: Sequence[int]) -> PatternGraph:
    """Undirected D-dimensional lattice; node index runs over the first coordinate fastest."""
    dims = [int(N) for N in dims]
    if not dims or min(dims) < 1:
        raise ArgumentError(f"lattice extents must be positive, got {dims}")
    adjacency = _path(dims[0])
    size = dims[0]
    for N in dims[1:]:
        adjacency = sp.kron(sp.identity(N), adjacency) + sp.kron(_path(N), sp.identity(size))
        size *= N
    return _from_boolean(sp.csr_matrix(adjacency), directed=False)


def lattice_coordinates(dims: Sequence[int]) -> np.ndarray:
    n = int(np.prod(dims))
    return np.stack(np.unravel_index(np.arange(n), tuple(dims), order="F"), axis=1)
