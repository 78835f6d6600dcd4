"""Dominant generalized eigenvector estimation and per-edge spectral scoring.

The dominant eigenvalue mu_max of the pencil (L_Gu, L_Su) measures how far
the subgraph's symmetrized Laplacian is from the original's.  A few steps of
generalized power iteration (multiply by L_Gu, solve with L_Su) give a vector
h_t rich in the top eigenvector directions; first-order perturbation of the
pencil then scores every off-subgraph edge by how much adding it would move
mu_max, and an r-dimensional embedding of the same quadratic forms lets the
selection step skip edges that perturb the same spectral directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphs import DirectedGraph, laplacian
from .solver import SpsSolver

__all__ = [
    "EigPair",
    "EdgeScore",
    "power_iterate",
    "edge_sensitivity",
    "edge_embedding",
    "spectral_similarity",
    "filter_similar_edges",
]


@dataclass
class EigPair:
    """Rayleigh-quotient estimate of mu_max with the vector that produced it."""

    mu: float
    h: np.ndarray
    t: int


@dataclass
class EdgeScore:
    edge_id: int
    tail: int
    head: int
    weight: float
    sensitivity: float
    embedding: np.ndarray


def _deflate(v):
    return v - v.mean()


def power_iterate(L_Gu, L_Su, h0, t=3, solver: SpsSolver | None = None, residual_cap=1e-3) -> EigPair:
    """t alternations of (multiply by L_Gu, solve with L_Su) from h0.

    h0 is deflated to zero mean up front and the iterate renormalized each
    step (the Rayleigh quotient is scale-invariant).  mu is estimated as
    (h^T L_Gu h) / (h^T L_Su h), which is at least 1 - eps whenever S is a
    subgraph of G with matching null space.

    Badly conditioned subgraph systems can bottom out above the solver's
    tolerance in double precision; since only an approximate eigenvector is
    needed, solves are accepted up to ``residual_cap`` and anything worse
    propagates as an error.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    L_Gu = sp.csr_array(L_Gu)
    L_Su = sp.csr_array(L_Su)
    if solver is None:
        solver = SpsSolver(L_Su)
    h = _deflate(np.asarray(h0, dtype=np.float64))
    for _ in range(t):
        y = L_Gu @ h
        h, stats = solver.solve(y)
        if not stats.converged and stats.residual > residual_cap:
            raise RuntimeError(
                f"subgraph solve stalled at residual {stats.residual:.3e}"
            )
        h = _deflate(h)
        norm = np.linalg.norm(h)
        if norm == 0:
            break
        h = h / norm
    num = float(h @ (L_Gu @ h))
    den = float(h @ (L_Su @ h))
    mu = num / den if den > 0 else np.inf
    return EigPair(mu=mu, h=h, t=t)


def _tail_forms(L_S, h):
    """(D_S - A_S) h, i.e. L_S^T h: per node p the sum over S-edges (p, q)
    of w (h_p - h_q).  Shared workhorse of sensitivity and embedding."""
    return L_S.T @ h


def edge_sensitivity(h, edge, w_pq, L_S) -> float:
    """First-order change of mu_max from adding off-subgraph edge (p, q).

    Evaluates h^T (dL_S L_S^T + L_S dL_S^T) h for the rank-one perturbation
    dL_S = w (e_p - e_q) e_p^T, which collapses to
    2 w (h_p - h_q) (L_S^T h)_p -- only the tail's column of L_S is touched.
    """
    p, q = edge
    L_S = sp.csr_array(L_S)
    if L_S[q, p] != 0:
        raise ValueError(f"edge ({p}, {q}) is already in the subgraph")
    h = np.asarray(h, dtype=np.float64)
    g = _tail_forms(L_S, h)
    return float(2.0 * w_pq * (h[p] - h[q]) * g[p])


def edge_embedding(h_list, edge, S: DirectedGraph) -> np.ndarray:
    """r-dimensional spectral embedding of the off-subgraph edge (p, q).

    Component k couples (p, q) with the subgraph edges sharing its tail p
    through the eigenvector estimate h^(k):

        sum_j w_{p,qj} h^T (e_pq e_pqj^T + e_pqj e_pq^T) h
          = 2 (h_p - h_q) (L_S^T h)_p

    Tails with no outgoing subgraph edges give zero components.
    """
    p, q = edge
    L_S = laplacian(S)
    out = np.empty(len(h_list))
    for k, h in enumerate(h_list):
        h = np.asarray(h, dtype=np.float64)
        g = _tail_forms(L_S, h)
        out[k] = 2.0 * (h[p] - h[q]) * g[p]
    return out


def spectral_similarity(s1, s2) -> float:
    """1 - ||s1 - s2|| / max(||s1||, ||s2||); two zero embeddings count as
    fully redundant (similarity 1)."""
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    if s1.shape != s2.shape:
        raise ValueError(f"embedding lengths differ: {s1.shape} vs {s2.shape}")
    denom = max(np.linalg.norm(s1), np.linalg.norm(s2))
    if denom == 0:
        return 1.0
    return float(1.0 - np.linalg.norm(s1 - s2) / denom)


def filter_similar_edges(candidates, epsilon, d_out, out_degrees=None):
    """Greedy similarity pruning of a sensitivity-ranked candidate list.

    Candidates whose tail already has out-degree >= d_out in the subgraph are
    excluded up front (skipped entirely when ``out_degrees`` is None).  The
    first survivor is always kept; each further edge is kept only if its
    spectral similarity to every kept edge stays below epsilon.  Output is a
    subset of the input in input order.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if d_out < 1:
        raise ValueError("d_out must be >= 1")
    pool = [
        c
        for c in candidates
        if out_degrees is None or out_degrees[c.tail] < d_out
    ]
    if not pool:
        return []
    kept = [pool[0]]
    kept_mat = [pool[0].embedding]
    kept_norms = [np.linalg.norm(pool[0].embedding)]
    for cand in pool[1:]:
        e = cand.embedding
        en = np.linalg.norm(e)
        M = np.asarray(kept_mat)
        norms = np.asarray(kept_norms)
        denom = np.maximum(norms, en)
        dist = np.linalg.norm(M - e, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            sims = np.where(denom > 0, 1.0 - dist / denom, 1.0)
        if np.all(sims < epsilon):
            kept.append(cand)
            kept_mat.append(e)
            kept_norms.append(en)
    return kept
