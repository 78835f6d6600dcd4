import numpy as np
import pytest
import scipy.sparse as sp

from specsparse import DirectedGraph, adjacency, incidence_factorization, laplacian, symmetrize

from conftest import random_digraph


class TestDirectedGraph:
    def test_duplicates_merge_by_sum(self):
        g = DirectedGraph(3, [(0, 1, 1.0), (0, 1, 2.5), (1, 2, 1.0)])
        assert g.edges == [(0, 1, 3.5), (1, 2, 1.0)]

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            DirectedGraph(2, [(0, 0, 1.0)])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError, match="weight"):
            DirectedGraph(2, [(0, 1, 0.0)])
        with pytest.raises(ValueError, match="weight"):
            DirectedGraph(2, [(0, 1, -1.0)])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            DirectedGraph(2, [(0, 2, 1.0)])

    def test_subgraph_keeps_weights(self):
        g = DirectedGraph(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)])
        s = g.subgraph([0, 2])
        assert s.edges == [(0, 1, 1.0), (2, 0, 3.0)]


class TestAdjacency:
    def test_single_edge(self):
        g = DirectedGraph(2, [(0, 1, 1.0)])
        A = adjacency(g).toarray()
        assert A[0, 1] == 1.0 and A.sum() == 1.0

    def test_empty(self):
        A = adjacency(DirectedGraph(3, []))
        assert A.shape == (3, 3) and A.nnz == 0

    def test_three_node(self):
        g = DirectedGraph(3, [(0, 1, 2.0), (0, 2, 1.0), (1, 2, 3.0)])
        expected = np.zeros((3, 3))
        expected[0, 1], expected[0, 2], expected[1, 2] = 2.0, 1.0, 3.0
        np.testing.assert_array_equal(adjacency(g).toarray(), expected)


class TestLaplacian:
    def test_single_edge(self):
        g = DirectedGraph(2, [(0, 1, 4.0)])
        np.testing.assert_array_equal(laplacian(g).toarray(), [[4.0, 0.0], [-4.0, 0.0]])

    def test_three_node_hand_value(self):
        g = DirectedGraph(3, [(0, 1, 2.0), (0, 2, 1.0), (1, 2, 3.0)])
        expected = np.array([[3.0, 0, 0], [-2.0, 3.0, 0], [-1.0, -3.0, 0]])
        np.testing.assert_array_equal(laplacian(g).toarray(), expected)

    def test_symmetric_pair(self):
        g = DirectedGraph(2, [(0, 1, 2.0), (1, 0, 2.0)])
        np.testing.assert_array_equal(laplacian(g).toarray(), [[2.0, -2.0], [-2.0, 2.0]])

    def test_matches_dense_construction(self, rng):
        for _ in range(20):
            g = random_digraph(rng, int(rng.integers(2, 30)))
            A = adjacency(g).toarray()
            D = np.diag(A.sum(axis=1))
            np.testing.assert_allclose(laplacian(g).toarray(), D - A.T, atol=0)

    def test_column_sums_zero(self, rng):
        for _ in range(20):
            g = random_digraph(rng, int(rng.integers(2, 40)))
            cols = np.asarray(laplacian(g).sum(axis=0)).ravel()
            np.testing.assert_allclose(cols, 0, atol=1e-12)

    def test_offdiagonals_nonpositive(self, rng):
        g = random_digraph(rng, 25)
        L = laplacian(g).toarray()
        off = L - np.diag(np.diag(L))
        assert off.max() <= 0


class TestSymmetrize:
    def test_single_edge(self):
        g = DirectedGraph(2, [(0, 1, 3.0)])
        np.testing.assert_array_equal(
            symmetrize(laplacian(g)).toarray(), [[9.0, -9.0], [-9.0, 9.0]]
        )

    def test_matches_dense_product(self, rng):
        for _ in range(20):
            g = random_digraph(rng, int(rng.integers(2, 40)))
            L = laplacian(g)
            dense = L.toarray() @ L.toarray().T
            got = symmetrize(L).toarray()
            scale = max(np.abs(dense).max(), 1e-30)
            np.testing.assert_allclose(got, dense, atol=1e-12 * scale)

    def test_row_sums_zero(self, rng):
        g = random_digraph(rng, 30)
        Lu = symmetrize(laplacian(g))
        np.testing.assert_allclose(np.asarray(Lu.sum(axis=1)).ravel(), 0, atol=1e-10)

    def test_star_heads_form_clique(self):
        # one tail with four outgoing edges couples every pair of heads
        g = DirectedGraph(5, [(0, i, 1.0) for i in range(1, 5)])
        Lu = symmetrize(laplacian(g)).toarray()
        for i in range(1, 5):
            for j in range(1, 5):
                if i != j:
                    assert Lu[i, j] != 0

    def test_positive_offdiagonals_possible(self):
        g = DirectedGraph(5, [(0, i, 1.0) for i in range(1, 5)])
        Lu = symmetrize(laplacian(g)).toarray()
        off = Lu - np.diag(np.diag(Lu))
        assert off.max() > 0

    def test_sps_quadratic_form(self, rng):
        for _ in range(10):
            g = random_digraph(rng, int(rng.integers(2, 30)))
            Lu = symmetrize(laplacian(g))
            X = rng.standard_normal((g.n, 100))
            quad = np.einsum("ij,ij->j", X, Lu @ X)
            assert quad.min() >= -1e-12 * max(1.0, np.abs(quad).max())

    def test_symmetry_exact(self, rng):
        g = random_digraph(rng, 35)
        Lu = symmetrize(laplacian(g))
        diff = (Lu - Lu.T).toarray()
        assert np.abs(diff).max() <= 1e-12 * np.abs(Lu.toarray()).max()

    def test_exact_cancellation_dropped(self):
        # two tails pointing at the same pair with weights arranged so the
        # coupling term cancels: 2 -> {0, 1} and edges chosen so that
        # A_ki A_kj = A_ki D_kj + D_ki A_kj has a solution; the simplest case
        # is a single tail with two unit edges into nodes that have no other
        # edges, where the coupling is -w^2 + 0 + 0 != 0, so instead check
        # the documented dropping rule directly on a crafted matrix.
        L = sp.csr_array(np.array([[1.0, -1.0, 1e-20], [-1.0, 1.0, 0.0], [1e-20, 0.0, 1.0]]))
        out = symmetrize(L).toarray()
        assert out[0, 2] == 0.0 and out[2, 0] == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="square"):
            symmetrize(sp.csr_array(np.ones((2, 3))))


class TestIncidenceFactorization:
    def test_single_edge(self):
        g = DirectedGraph(2, [(0, 1, 5.0)])
        B, C, W = incidence_factorization(g)
        np.testing.assert_array_equal(B.toarray(), [[1.0, -1.0]])
        np.testing.assert_array_equal(C.toarray(), [[1.0, 0.0]])
        np.testing.assert_array_equal(W.toarray(), [[5.0]])
        np.testing.assert_array_equal((B.T @ W @ C).toarray(), laplacian(g).toarray())

    def test_two_cycle(self):
        g = DirectedGraph(2, [(0, 1, 2.0), (1, 0, 2.0)])
        B, C, W = incidence_factorization(g)
        np.testing.assert_array_equal(
            (B.T @ W @ C).toarray(), [[2.0, -2.0], [-2.0, 2.0]]
        )

    def test_empty(self):
        B, C, W = incidence_factorization(DirectedGraph(3, []))
        assert (B.T @ W @ C).shape == (3, 3)
        assert (B.T @ W @ C).nnz == 0

    def test_exact_on_integer_weights(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 30))
            edges = {}
            for _ in range(3 * n):
                t, h = rng.integers(0, n, 2)
                if t != h:
                    edges[(int(t), int(h))] = float(rng.integers(1, 10))
            if not edges:
                continue
            g = DirectedGraph(n, [(t, h, w) for (t, h), w in edges.items()])
            B, C, W = incidence_factorization(g)
            diff = ((B.T @ W @ C) - laplacian(g)).toarray()
            assert np.abs(diff).max() == 0.0
