"""Seeded generators for benchmark-style directed graphs.

The public sparse-matrix collections are not always reachable, so the test
and demo graphs are generated locally: ``banded_digraph`` mimics the sparse
banded structure of small simulation matrices, ``clustered_digraph`` plants
k communities for partitioning experiments.  Both are deterministic for a
fixed seed.
"""

from __future__ import annotations

import numpy as np

from .graphs import DirectedGraph

__all__ = ["banded_digraph", "clustered_digraph"]


def banded_digraph(n=115, avg_out=3.7, band=8, long_range=0.15, seed=7) -> DirectedGraph:
    """Directed graph with mostly short-range edges and a few long hops.

    Each node gets a Poisson-ish number of out-edges, most landing within
    ``band`` positions, plus occasional long-range targets; weights are
    uniform in [0.5, 2].  A wrap-around backbone keeps the graph connected.
    """
    rng = np.random.default_rng(seed)
    edges = {}
    for i in range(n):
        edges[(i, (i + 1) % n)] = float(rng.uniform(0.5, 2.0))
    extra = max(0, int(round((avg_out - 1.0) * n)))
    while extra > 0:
        i = int(rng.integers(n))
        if rng.random() < long_range:
            j = int(rng.integers(n))
        else:
            j = int((i + rng.integers(1, band + 1) * rng.choice((-1, 1))) % n)
        if i == j or (i, j) in edges:
            continue
        edges[(i, j)] = float(rng.uniform(0.5, 2.0))
        extra -= 1
    return DirectedGraph(n, [(t, h, w) for (t, h), w in edges.items()])


def clustered_digraph(n=32, k=4, intra=4.0, inter=0.6, seed=11) -> DirectedGraph:
    """Directed graph with k planted communities.

    Nodes split evenly into k blocks; each node draws ``intra`` expected
    out-edges inside its block (heavy weights) and ``inter`` outside (light
    weights), plus an in-block ring so every block is connected.
    """
    rng = np.random.default_rng(seed)
    blocks = np.array_split(np.arange(n), k)
    edges = {}
    for block in blocks:
        for idx in range(len(block)):
            a, b = int(block[idx]), int(block[(idx + 1) % len(block)])
            if a != b:
                edges[(a, b)] = float(rng.uniform(1.5, 3.0))
    for bi, block in enumerate(blocks):
        for u in block:
            for _ in range(rng.poisson(intra)):
                v = int(rng.choice(block))
                if v != u and (int(u), v) not in edges:
                    edges[(int(u), v)] = float(rng.uniform(1.5, 3.0))
            for _ in range(rng.poisson(inter)):
                other = blocks[(bi + 1 + int(rng.integers(k - 1))) % k] if k > 1 else block
                v = int(rng.choice(other))
                if v != int(u) and (int(u), v) not in edges:
                    edges[(int(u), v)] = float(rng.uniform(0.05, 0.2))
    return DirectedGraph(n, [(t, h, w) for (t, h), w in edges.items()])
