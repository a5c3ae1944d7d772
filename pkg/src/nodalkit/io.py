"""Reading matrices and signed graphs, writing reports.

Signed edge lists are plain text: a header ``n m`` followed by ``m`` lines
``i j s`` with 0-based vertices and ``s`` in ``{+1, -1}``. Blank lines and
lines starting with ``#`` are ignored. The matrix of an edge list has
``M_ij = -s`` and zero diagonal. Matrices are read from Matrix Market
(``.mtx``) or numpy (``.npy``) files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .exceptions import ParseError
from .graph_core import SignedGraph, as_symmetric_matrix, from_symmetric_matrix


def parse_edge_list(text: str, path="<string>") -> SignedGraph:
    lines = [(no, ln.strip()) for no, ln in enumerate(text.splitlines(), start=1)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(path, 1, "empty input; expected header 'n m'")
    no, head = lines[0]
    parts = head.split()
    if len(parts) != 2:
        raise ParseError(path, no, f"expected header 'n m', got {head!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(path, no, f"header values must be integers, got {head!r}") from None
    if n < 1 or m < 0:
        raise ParseError(path, no, "need n >= 1 and m >= 0")
    body = lines[1:]
    if len(body) != m:
        where = body[-1][0] if body else no
        raise ParseError(path, where, f"header announces {m} edges, found {len(body)}")
    edges = {}
    for no, ln in body:
        tok = ln.split()
        if len(tok) != 3:
            raise ParseError(path, no, f"expected 'i j s', got {ln!r}")
        try:
            i, j, s = int(tok[0]), int(tok[1]), int(tok[2])
        except ValueError:
            raise ParseError(path, no, f"non-integer field in {ln!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(path, no, f"vertex out of range 0..{n - 1}")
        if i == j:
            raise ParseError(path, no, "self-loops are not allowed")
        if s not in (1, -1):
            raise ParseError(path, no, f"sign must be +1 or -1, got {tok[2]}")
        key = (min(i, j), max(i, j))
        if key in edges:
            raise ParseError(path, no, f"duplicate edge {key}")
        edges[key] = s
    return SignedGraph.from_edges(n, [(i, j, s) for (i, j), s in sorted(edges.items())])


def read_edge_list(path) -> SignedGraph:
    path = Path(path)
    return parse_edge_list(path.read_text(), str(path))


def format_edge_list(G: SignedGraph) -> str:
    lines = [f"{G.n} {G.m}"]
    lines += [f"{i} {j} {'+1' if s > 0 else '-1'}" for i, j, s in G.edges]
    return "\n".join(lines) + "\n"


def write_edge_list(G: SignedGraph, path):
    Path(path).write_text(format_edge_list(G))


def read_matrix_market(path) -> np.ndarray:
    path = Path(path)
    try:
        A = scipy.io.mmread(str(path))
    except (ValueError, OSError, IndexError) as exc:
        raise ParseError(str(path), 1, f"not a readable Matrix Market file: {exc}") from None
    if scipy.sparse.issparse(A):
        A = A.toarray()
    return as_symmetric_matrix(np.asarray(A, dtype=float))


def write_matrix_market(M, path):
    M = as_symmetric_matrix(M)
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(M), symmetry="symmetric")


def read_input(path):
    """Load ``(M, G)`` from an edge list, Matrix Market or ``.npy`` file."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".mtx":
        M = read_matrix_market(path)
        return M, from_symmetric_matrix(M)
    if suffix == ".npy":
        M = as_symmetric_matrix(np.load(path))
        return M, from_symmetric_matrix(M)
    G = read_edge_list(path)
    return G.to_matrix(), G


def read_vector(path) -> np.ndarray:
    """Whitespace- or comma-separated numbers."""
    path = Path(path)
    vals = []
    for no, ln in enumerate(path.read_text().splitlines(), start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        for tok in ln.replace(",", " ").split():
            try:
                vals.append(float(tok))
            except ValueError:
                raise ParseError(str(path), no, f"not a number: {tok!r}") from None
    return np.array(vals)


def plain(obj):
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [plain(v) for v in items]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def to_json_text(obj) -> str:
    return json.dumps(plain(obj), indent=2, sort_keys=True) + "\n"


def to_csv_text(rows, columns) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([plain(row.get(c)) for c in columns])
    return buf.getvalue()
