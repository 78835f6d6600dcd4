"""Matrix Market ingestion and serialization of directed graphs.

Coordinate files are read as weighted edge lists: entry (i, j, w) becomes the
directed edge i -> j (1-based in files, 0-based internally).  Diagonal entries
are dropped, duplicates merge by weight summation, negative weights are folded
to their absolute value with a warning, and symmetric-header files expand to
both orientations.
"""

from __future__ import annotations

import warnings

from .graphs import DirectedGraph

__all__ = ["ParseError", "read_matrix_market", "write_matrix_market", "write_sparsifier"]

_FIELDS = ("real", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric")


class ParseError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def read_matrix_market(path) -> DirectedGraph:
    """Read a Matrix Market coordinate file as a directed graph."""
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")

    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise ParseError(path, 1, f"bad header {lines[0]!r}")
    _, obj, fmt, field, symmetry = (tok.lower() for tok in header)
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(path, 1, f"only 'matrix coordinate' is supported, got {obj!r} {fmt!r}")
    if field not in _FIELDS:
        raise ParseError(path, 1, f"unsupported field {field!r} (expected one of {_FIELDS})")
    if symmetry not in _SYMMETRIES:
        raise ParseError(path, 1, f"unsupported symmetry {symmetry!r} (expected one of {_SYMMETRIES})")
    pattern = field == "pattern"

    lineno = 1
    size = None
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        size = stripped.split()
        break
    if size is None:
        raise ParseError(path, lineno, "missing size line")
    if len(size) != 3:
        raise ParseError(path, lineno, f"size line must be 'nrows ncols nnz', got {line!r}")
    try:
        nrows, ncols, nnz = (int(tok) for tok in size)
    except ValueError:
        raise ParseError(path, lineno, f"non-integer size line {line!r}") from None
    if nrows != ncols:
        raise ParseError(path, lineno, f"graph matrices must be square, got {nrows}x{ncols}")

    edges = []
    seen = 0
    negatives = 0
    want = 2 if pattern else 3
    for lineno, line in enumerate(lines[lineno:], start=lineno + 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        toks = stripped.split()
        if len(toks) < want:
            raise ParseError(path, lineno, f"expected {want} fields, got {len(toks)}")
        try:
            i = int(toks[0])
            j = int(toks[1])
        except ValueError:
            raise ParseError(path, lineno, f"non-integer index in {stripped!r}") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(path, lineno, f"index ({i}, {j}) outside declared {nrows}x{ncols}")
        if pattern:
            w = 1.0
        else:
            try:
                w = float(toks[2])
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric value in {stripped!r}") from None
        seen += 1
        if seen > nnz:
            raise ParseError(path, lineno, f"more than the declared {nnz} entries")
        if i == j:
            continue
        if w < 0:
            negatives += 1
            w = -w
        if w == 0:
            continue
        edges.append((i - 1, j - 1, w))
        if symmetry == "symmetric" and i != j:
            edges.append((j - 1, i - 1, w))
    if seen != nnz:
        raise ParseError(path, lineno, f"declared {nnz} entries but found {seen}")
    if negatives:
        warnings.warn(
            f"{path}: {negatives} negative weights folded to absolute value",
            stacklevel=2,
        )
    return DirectedGraph(nrows, edges)


def write_matrix_market(g: DirectedGraph, path) -> None:
    """Write a graph as 'coordinate real general', 1-based, sorted by (row, col)."""
    with open(str(path), "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{g.n} {g.n} {g.num_edges}\n")
        for t, h, w in g.edges:
            fh.write(f"{t + 1} {h + 1} {w:.17g}\n")


def write_sparsifier(s, path) -> None:
    """Write a sparsifier's graph back to Matrix Market format."""
    write_matrix_market(s.graph, path)
