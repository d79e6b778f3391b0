import unittest

import numpy as np
import scipy.sparse as sp

from src.errors import ArgumentError, DimensionError
from src.graph import (
    BEYOND_CAP,
    INFINITY,
    bandwidth,
    bfs_distances,
    cuthill_mckee,
    distance_truncate,
    lattice_graph,
    level_set_sizes,
    pattern_graph,
    within_distance,
)
from src.harness.generators import gmrf, tridiag


def path_graph(n):
    return pattern_graph(tridiag(n, -1, 4, -1), directed=False)


def tree_matrix(t, depth):
    """Adjacency of the full t-ary tree, root 0, children of k at t*k+1 .. t*k+t."""
    n = (t ** (depth + 1) - 1) // (t - 1)
    parents = np.arange(1, n)
    children_of = (parents - 1) // t
    return sp.coo_matrix((np.ones(n - 1), (children_of, parents)), shape=(n, n))


class TestPatternGraph(unittest.TestCase):
    def test_tridiag_is_path(self):
        G = path_graph(4)
        self.assertEqual([list(G.neighbors(i)) for i in range(4)], [[1], [0, 2], [1, 3], [2]])

    def test_undirected_union(self):
        A = np.array([[1.0, 2.0], [0.0, 1.0]])
        directed = pattern_graph(A, directed=True)
        self.assertEqual(list(directed.neighbors(1)), [])
        G = pattern_graph(A, directed=False)
        self.assertEqual(list(G.neighbors(0)), [1])
        self.assertEqual(list(G.neighbors(1)), [0])

    def test_diagonal_is_edgeless(self):
        G = pattern_graph(sp.diags([1.0, 2.0, 3.0]))
        self.assertEqual(G.n_edges, 0)

    def test_non_square(self):
        with self.assertRaises(DimensionError):
            pattern_graph(np.ones((2, 3)))


class TestDistances(unittest.TestCase):
    def test_path(self):
        np.testing.assert_array_equal(bfs_distances(path_graph(4), 0), [0, 1, 2, 3])

    def test_disconnected(self):
        G = pattern_graph(np.eye(2))
        self.assertEqual(bfs_distances(G, 0)[1], INFINITY)

    def test_lattice_corner_to_corner(self):
        G = lattice_graph((7, 7))
        self.assertEqual(int(bfs_distances(G, 0)[48]), 12)

    def test_cap(self):
        dist = bfs_distances(path_graph(6), 0, cap=2)
        np.testing.assert_array_equal(dist[:3], [0, 1, 2])
        self.assertTrue(np.all(dist[3:] == BEYOND_CAP))

    def test_cap_on_exhausted_component(self):
        A = sp.block_diag([tridiag(3, -1, 4, -1), tridiag(3, -1, 4, -1)])
        dist = bfs_distances(pattern_graph(A, directed=False), 0, cap=5)
        self.assertTrue(np.all(dist[3:] == INFINITY))

    def test_cap_keeps_other_components_infinite(self):
        A = sp.block_diag([tridiag(3, -1, 4, -1), sp.identity(1)])
        dist = bfs_distances(pattern_graph(A, directed=False), 0, cap=1)
        np.testing.assert_array_equal(dist, [0, 1, BEYOND_CAP, INFINITY])

    def test_cap_follows_edge_direction(self):
        # 0 -> 1 -> 2 and 3 -> 0: node 3 is never reachable from 0
        A = sp.coo_matrix((np.ones(3), ([0, 1, 3], [1, 2, 0])), shape=(4, 4))
        dist = bfs_distances(pattern_graph(A, directed=True), 0, cap=1)
        np.testing.assert_array_equal(dist, [0, 1, BEYOND_CAP, INFINITY])

    def test_bad_source(self):
        with self.assertRaises(ArgumentError):
            bfs_distances(path_graph(3), 3)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(11)
        A = sp.random(60, 60, density=0.05, random_state=12) + sp.identity(60)
        G = pattern_graph(A, directed=False)
        D = np.array([bfs_distances(G, i) for i in range(60)]).astype(np.int64)
        for _ in range(300):
            i, j, k = rng.integers(0, 60, size=3)
            if max(D[i, j], D[j, k]) < int(INFINITY):
                self.assertLessEqual(D[i, k], D[i, j] + D[j, k])


class TestLevelSets(unittest.TestCase):
    def test_path_middle(self):
        L = level_set_sizes(path_graph(5), 2)
        np.testing.assert_array_equal(L.sizes, [1, 2, 2])
        self.assertEqual(L.unreachable, 0)

    def test_lattice_interior(self):
        G = lattice_graph((5, 5))
        self.assertEqual(level_set_sizes(G, 12).sizes[1], 4)

    def test_tree_levels(self):
        t, depth = 3, 4
        G = pattern_graph(tree_matrix(t, depth), directed=False)
        L = level_set_sizes(G, 0)
        np.testing.assert_array_equal(L.sizes, [t ** k for k in range(depth + 1)])

    def test_sizes_sum_to_n(self):
        A = sp.random(80, 80, density=0.02, random_state=3)
        G = pattern_graph(A, directed=True)
        for source in (0, 17, 79):
            L = level_set_sizes(G, source)
            self.assertEqual(int(L.sizes.sum()) + L.unreachable, 80)
            self.assertEqual(L.sizes[0], 1)


class TestTruncation(unittest.TestCase):
    def _decaying(self, n, q):
        G = path_graph(n)
        D = np.array([bfs_distances(G, i) for i in range(n)]).astype(float)
        return G, q ** D

    def test_large_m_keeps_everything(self):
        G, B = self._decaying(6, 0.5)
        np.testing.assert_allclose(distance_truncate(B, G, 10).toarray(), B)

    def test_zero_m_is_diagonal(self):
        G, B = self._decaying(6, 0.5)
        np.testing.assert_allclose(distance_truncate(B, G, 0).toarray(), np.diag(np.diag(B)))

    def test_semi_bandwidth(self):
        G, B = self._decaying(6, 0.5)
        T = distance_truncate(B, G, 2)
        self.assertEqual(bandwidth(T), 2)
        self.assertEqual(T.nnz, 6 + 2 * 5 + 2 * 4)

    def test_idempotent(self):
        G, B = self._decaying(9, 0.3)
        once = distance_truncate(B, G, 3)
        twice = distance_truncate(once, G, 3)
        self.assertEqual((once != twice).nnz, 0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            distance_truncate(np.eye(4), path_graph(5), 1)

    def test_one_norm_decreases_on_lattice(self):
        G = lattice_graph((8, 8))
        D = np.array([bfs_distances(G, i) for i in range(G.n)]).astype(float)
        B = 0.7 * 0.5 ** D
        errors = [np.linalg.norm(B - distance_truncate(B, G, m).toarray(), 1) for m in range(0, 15)]
        self.assertTrue(all(a > b for a, b in zip(errors, errors[1:])))
        self.assertLess(errors[-1], 1e-3)

    def test_within_distance_matches_bfs(self):
        A = sp.random(40, 40, density=0.06, random_state=9)
        G = pattern_graph(A, directed=True)
        R = within_distance(G, 3).toarray()
        for i in range(40):
            dist = bfs_distances(G, i)
            np.testing.assert_array_equal(R[i], dist <= 3)


class TestCuthillMcKee(unittest.TestCase):
    def test_path_keeps_bandwidth_one(self):
        result = cuthill_mckee(path_graph(10))
        self.assertEqual(result.bandwidth, 1)
        self.assertEqual(sorted(result.permutation), list(range(10)))

    def test_star(self):
        rows = [0, 0, 0, 0]
        cols = [1, 2, 3, 4]
        A = sp.coo_matrix((np.ones(4), (rows, cols)), shape=(5, 5))
        result = cuthill_mckee(pattern_graph(A, directed=False))
        self.assertEqual(sorted(result.permutation), list(range(5)))
        self.assertLessEqual(result.bandwidth, 4)

    def test_directed_rejected(self):
        with self.assertRaises(ArgumentError):
            cuthill_mckee(pattern_graph(tridiag(4, -1, 4, -1), directed=True))

    def test_gmrf_bandwidth_reduced(self):
        A = gmrf(1000, 20.0)
        result = cuthill_mckee(pattern_graph(A, directed=False))
        self.assertLess(result.bandwidth, result.bandwidth_before)
        self.assertLess(result.bandwidth, 1000 // 4)


if __name__ == "__main__":
    unittest.main()
