"""Spectral sparsification of directed graphs via Laplacian symmetrization."""

from .graphs import DirectedGraph, adjacency, laplacian, symmetrize, incidence_factorization
from .mmio import ParseError, read_matrix_market, write_matrix_market, write_sparsifier
from .seed import SeedSubgraph, build_seed, maximum_spanning_structure, symmetrized_transition
from .solver import (
    AggregationHierarchy,
    SolverParams,
    SolveStats,
    SpsSolver,
    build_hierarchy,
    gauss_seidel,
    node_affinity,
    solve_sps,
)
from .sensitivity import (
    EdgeScore,
    EigPair,
    edge_embedding,
    edge_sensitivity,
    filter_similar_edges,
    power_iterate,
    spectral_similarity,
)
from .sparsify import IterationReport, Sparsifier, SparsifyParams, condition_metrics, sparsify
from .apps import (
    PageRankResult,
    Partitioning,
    adjusted_rand_index,
    directed_solve,
    kmeans,
    pagerank,
    pagerank_correlation,
    spectral_partition,
)
from .synth import banded_digraph, clustered_digraph

__version__ = "0.1.0"
