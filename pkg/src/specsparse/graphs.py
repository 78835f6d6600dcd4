"""Directed graph container, Laplacians, symmetrization and incidence factors.

The directed Laplacian used throughout is L = D - A^T with D holding weighted
out-degrees, so every *column* of L sums to zero.  Symmetrizing it as
L_u = L L^T yields a symmetric positive semidefinite matrix with the all-ones
vector in its null space; L_u behaves like an undirected Laplacian except that
off-diagonals may turn positive (negative undirected edge weights) when the
out-edges of a shared tail couple.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DirectedGraph",
    "adjacency",
    "laplacian",
    "symmetrize",
    "incidence_factorization",
]

# Relative cutoff below which symmetrization entries are treated as exact
# cancellations and dropped.
CANCEL_TOL = 1e-14


class DirectedGraph:
    """Weighted directed graph with 0-based node ids.

    Edges are canonicalized at construction: duplicates of the same
    (tail, head) pair merge by weight summation, the list is sorted by
    (tail, head), and all weights must be strictly positive.  Self-loops are
    rejected unless ``allow_self_loops`` is set (only the PageRank dangling
    fix ever sets it).  Instances are treated as immutable.
    """

    __slots__ = ("n", "tails", "heads", "weights")

    def __init__(self, n, edges, allow_self_loops=False):
        if n < 0:
            raise ValueError(f"node count must be >= 0, got {n}")
        self.n = int(n)

        merged = {}
        for tail, head, weight in edges:
            tail = int(tail)
            head = int(head)
            if not (0 <= tail < self.n and 0 <= head < self.n):
                raise ValueError(f"edge ({tail}, {head}) out of range for n={self.n}")
            if tail == head and not allow_self_loops:
                raise ValueError(f"self-loop at node {tail} not allowed")
            if not weight > 0:
                raise ValueError(f"edge ({tail}, {head}) has non-positive weight {weight}")
            key = (tail, head)
            merged[key] = merged.get(key, 0.0) + float(weight)

        items = sorted(merged.items())
        self.tails = np.array([t for (t, _), _ in items], dtype=np.int64)
        self.heads = np.array([h for (_, h), _ in items], dtype=np.int64)
        self.weights = np.array([w for _, w in items], dtype=np.float64)

    @property
    def num_edges(self):
        return self.tails.size

    @property
    def edges(self):
        """Edge list as (tail, head, weight) tuples in canonical order."""
        return [
            (int(t), int(h), float(w))
            for t, h, w in zip(self.tails, self.heads, self.weights)
        ]

    def edge_set(self):
        """Set of (tail, head) pairs."""
        return set(zip(self.tails.tolist(), self.heads.tolist()))

    def out_degrees(self):
        """Unweighted out-degree per node."""
        return np.bincount(self.tails, minlength=self.n).astype(np.int64)

    def out_strengths(self):
        """Weighted out-degree per node."""
        return np.bincount(self.tails, weights=self.weights, minlength=self.n)

    def subgraph(self, edge_ids):
        """Graph on the same node set keeping only the given edge ids."""
        ids = np.asarray(sorted(edge_ids), dtype=np.int64)
        return DirectedGraph(
            self.n,
            zip(self.tails[ids], self.heads[ids], self.weights[ids]),
        )

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.n, self.tails.tobytes(), self.heads.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return f"DirectedGraph(n={self.n}, m={self.num_edges})"


def adjacency(g: DirectedGraph) -> sp.csr_array:
    """Adjacency matrix A with A[i, j] = w for each directed edge (i, j)."""
    A = sp.coo_array((g.weights, (g.tails, g.heads)), shape=(g.n, g.n))
    A = A.tocsr()
    A.sum_duplicates()
    return A


def laplacian(g: DirectedGraph) -> sp.csr_array:
    """Directed Laplacian L = D - A^T (D = diagonal of weighted out-degrees).

    Every column of L sums to zero and off-diagonals are non-positive.  Row
    sums vanish only when in- and out-degrees agree, so only the column-sum
    property is guaranteed.
    """
    rows = np.concatenate([g.tails, g.heads])
    cols = np.concatenate([g.tails, g.tails])
    vals = np.concatenate([g.weights, -g.weights])
    L = sp.coo_array((vals, (rows, cols)), shape=(g.n, g.n)).tocsr()
    L.sum_duplicates()
    L.eliminate_zeros()
    return L


def symmetrize(L: sp.sparray) -> sp.csr_array:
    """Symmetrized Laplacian L_u = L L^T, computed sparsely.

    The result is SPS with the all-ones vector in its null space.  Entries
    whose magnitude falls below CANCEL_TOL times both touching diagonals are
    treated as exact cancellations and dropped (the pattern stays symmetric
    because the cutoff is applied symmetrically).
    """
    L = sp.csr_array(L)
    if L.shape[0] != L.shape[1]:
        raise ValueError(f"expected square matrix, got {L.shape}")
    Lu = (L @ L.T).tocsr()
    # Sparse products accumulate (i,j) and (j,i) in different orders; average
    # to make the result exactly symmetric.
    Lu = ((Lu + Lu.T) * 0.5).tocoo()

    diag = np.zeros(Lu.shape[0])
    on_diag = Lu.row == Lu.col
    diag[Lu.row[on_diag]] = Lu.data[on_diag]

    cut = CANCEL_TOL * np.maximum(diag[Lu.row], diag[Lu.col])
    keep = on_diag | (np.abs(Lu.data) >= cut)
    out = sp.coo_array(
        (Lu.data[keep], (Lu.row[keep], Lu.col[keep])), shape=Lu.shape
    ).tocsr()
    out.eliminate_zeros()
    return out


def incidence_factorization(g: DirectedGraph):
    """Factor the directed Laplacian as L = B^T W C.

    For the i-th edge (tail, head):

      B[i, tail] = +1,  B[i, head] = -1
      C[i, tail] = +1
      W[i, i]    = weight

    This orientation is the one for which B^T W C reproduces D - A^T exactly
    (putting the +1 of both factors on the head does not).
    """
    m = g.num_edges
    ids = np.arange(m)
    B = sp.coo_array(
        (
            np.concatenate([np.ones(m), -np.ones(m)]),
            (np.concatenate([ids, ids]), np.concatenate([g.tails, g.heads])),
        ),
        shape=(m, g.n),
    ).tocsr()
    B.sum_duplicates()
    B.eliminate_zeros()  # self-loops cancel to an all-zero row
    C = sp.coo_array((np.ones(m), (ids, g.tails)), shape=(m, g.n)).tocsr()
    W = sp.dia_array((g.weights[np.newaxis, :], [0]), shape=(m, m)).tocsr()
    return B, C, W
