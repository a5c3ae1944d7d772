"""Signed graphs derived from symmetric matrices.

The signed graph of a symmetric matrix ``M`` has an edge ``{i, j}`` whenever
``M[i, j]`` is nonzero, with sign ``sigma_ij = -sgn(M[i, j])``. Generalized
Laplacians (nonpositive off-diagonal) therefore give all-positive graphs.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import ExactCapExceeded, NonSymmetricMatrixError

DEFAULT_ZERO_TOL = 1e-12
DEFAULT_FRUSTRATION_CAP = 24


def as_symmetric_matrix(M, sym_tol=None) -> np.ndarray:
    """Return ``M`` as a float array after checking it is square and symmetric."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise ValueError("matrix must have at least one row")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if sym_tol is None:
        sym_tol = 64 * np.finfo(float).eps * max(1.0, float(np.abs(A).max()))
    diff = np.abs(A - A.T)
    if diff.max() > sym_tol:
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        raise NonSymmetricMatrixError(int(i), int(j), A[i, j], A[j, i])
    return A


@dataclass(frozen=True)
class SignedGraph:
    """Undirected graph with edge signs in {+1, -1}.

    ``edges`` holds ``(i, j, sign)`` with ``i < j`` sorted lexicographically.
    """

    n: int
    edges: tuple
    neighbors: tuple = field(repr=False, compare=False, default=())

    def __post_init__(self):
        seen = set()
        adj = [[] for _ in range(self.n)]
        for i, j, s in self.edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge ({i}, {j}) for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if s not in (1, -1):
                raise ValueError(f"edge sign must be +-1, got {s}")
            seen.add((i, j))
            adj[i].append((j, s))
            adj[j].append((i, s))
        for a in adj:
            a.sort()
        object.__setattr__(self, "neighbors", tuple(tuple(a) for a in adj))

    @classmethod
    def from_edges(cls, n, edges):
        norm = []
        for i, j, s in edges:
            i, j, s = int(i), int(j), int(s)
            if i > j:
                i, j = j, i
            norm.append((i, j, s))
        return cls(int(n), tuple(sorted(norm)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def sign(self, i, j):
        """Sign of edge ``{i, j}`` or 0 if absent."""
        for k, s in self.neighbors[i]:
            if k == j:
                return s
        return 0

    @cached_property
    def _edge_array(self):
        arr = np.asarray(self.edges, dtype=int).reshape(-1, 3)
        arr.setflags(write=False)
        return arr

    def edge_arrays(self):
        """Return ``(I, J, S)`` integer arrays of the edge list (read-only views)."""
        arr = self._edge_array
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def to_matrix(self) -> np.ndarray:
        """Matrix with ``M_ij = -sigma_ij`` and zero diagonal."""
        M = np.zeros((self.n, self.n))
        for i, j, s in self.edges:
            M[i, j] = M[j, i] = -s
        return M


@dataclass(frozen=True)
class GraphInvariants:
    kappa: int
    nu: int
    e_total: int
    e_pos: int
    e_neg: int


@dataclass(frozen=True)
class FrustrationResult:
    f: int
    witness: np.ndarray
    exact: bool


def from_symmetric_matrix(M, zero_tol: float = DEFAULT_ZERO_TOL) -> SignedGraph:
    """Signed graph of ``M``: edge iff ``|M_ij| > zero_tol``, sign ``-sgn(M_ij)``."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    A = as_symmetric_matrix(M)
    n = A.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    vals = A[iu, ju]
    keep = np.abs(vals) > zero_tol
    signs = -np.sign(vals[keep]).astype(int)
    edges = tuple(zip(iu[keep].tolist(), ju[keep].tolist(), signs.tolist()))
    return SignedGraph(n, edges)


def connected_components(G: SignedGraph, subset=None, edge_filter=None):
    """Components of ``G[subset]`` ordered by smallest vertex.

    ``edge_filter(i, j, sign)`` optionally restricts which edges count.
    """
    if subset is None:
        members = set(range(G.n))
    else:
        members = set(int(v) for v in subset)
    seen = set()
    comps = []
    for start in sorted(members):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w, s in G.neighbors[u]:
                if w in members and w not in seen:
                    if edge_filter is not None and not edge_filter(u, w, s):
                        continue
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(frozenset(comp))
    return comps


def count_components(n, I, J, vertices=None) -> int:
    """Number of components of a graph given by edge arrays, via scipy."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    I = np.asarray(I, dtype=int)
    J = np.asarray(J, dtype=int)
    if vertices is None:
        if n == 0:
            return 0
        A = coo_matrix((np.ones(len(I)), (I, J)), shape=(n, n))
        return int(cc(A, directed=False)[0])
    vertices = np.asarray(sorted(vertices), dtype=int)
    if vertices.size == 0:
        return 0
    relabel = -np.ones(n, dtype=int)
    relabel[vertices] = np.arange(vertices.size)
    keep = (relabel[I] >= 0) & (relabel[J] >= 0)
    A = coo_matrix(
        (np.ones(int(keep.sum())), (relabel[I[keep]], relabel[J[keep]])),
        shape=(vertices.size, vertices.size),
    )
    return int(cc(A, directed=False)[0])


def graph_invariants(G: SignedGraph) -> GraphInvariants:
    kappa = len(connected_components(G))
    e_pos = sum(1 for e in G.edges if e[2] > 0)
    e = G.m
    return GraphInvariants(kappa=kappa, nu=e - G.n + kappa, e_total=e, e_pos=e_pos, e_neg=e - e_pos)


def _check_state(G, eps):
    eps = np.asarray(eps)
    if eps.shape != (G.n,):
        raise ValueError(f"state has length {eps.size}, graph has {G.n} vertices")
    return eps


def frustrated_edge_count(G: SignedGraph, eps) -> int:
    eps = _check_state(G, eps)
    if not G.edges:
        return 0
    I, J, S = G.edge_arrays()
    return int(np.count_nonzero(S * np.sign(eps[I]) * np.sign(eps[J]) < 0))


def switch(G: SignedGraph, eps) -> SignedGraph:
    """Switch ``G`` by the state ``eps``: ``sigma'_ij = sigma_ij eps_i eps_j``."""
    eps = _check_state(G, eps)
    return SignedGraph(
        G.n, tuple((i, j, int(s * eps[i] * eps[j])) for i, j, s in G.edges)
    )


def switch_matrix(M, eps) -> np.ndarray:
    """``D M D`` for ``D = diag(eps)``."""
    d = np.asarray(eps, dtype=float)
    return np.asarray(M) * np.outer(d, d)


def frustration_index_exact(G: SignedGraph, cap: int = DEFAULT_FRUSTRATION_CAP) -> FrustrationResult:
    """Minimum number of frustrated edges, by branch and bound.

    Vertex 0 is fixed to +1 and vertices are assigned in index order trying
    +1 first, so the first optimum found (only strict improvements replace
    the incumbent) is the lexicographically smallest optimal state in the
    order +1 < -1.
    """
    n = G.n
    if n > cap:
        raise ExactCapExceeded("exact frustration", n, cap, "frustration_index_heuristic")
    if n == 0:
        return FrustrationResult(0, np.zeros(0, dtype=int), True)
    fwd = [[(j, s) for j, s in G.neighbors[i] if j > i] for i in range(n)]

    heur = frustration_index_heuristic(G, seed=0, restarts=4)
    best_f = heur.f + 1
    best = None
    eps = np.zeros(n, dtype=int)
    # cost[v, b] = frustrated edges between unassigned v and assigned vertices
    # if v takes value (+1, -1)[b]
    cost = np.zeros((n, 2), dtype=int)

    def slack_bound(depth):
        if depth >= n:
            return 0
        return int(cost[depth:].min(axis=1).sum())

    def assign(i, val, sign_fn):
        for j, s in fwd[i]:
            # edge frustrated when s * val * eps_j < 0
            if s * val > 0:
                cost[j, 1] += sign_fn
            else:
                cost[j, 0] += sign_fn

    def rec(i, partial):
        nonlocal best_f, best
        if partial + slack_bound(i) >= best_f:
            return
        if i == n:
            best_f = partial
            best = eps.copy()
            return
        choices = (1,) if i == 0 else (1, -1)
        for val in choices:
            add = int(cost[i, 0 if val == 1 else 1])
            eps[i] = val
            assign(i, val, 1)
            rec(i + 1, partial + add)
            assign(i, val, -1)
            eps[i] = 0

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * n + 100))
    try:
        rec(0, 0)
    finally:
        sys.setrecursionlimit(old)
    if best is None:  # heuristic was optimal and tied; cannot happen with +1 slack
        raise RuntimeError("exact frustration search found no state")
    return FrustrationResult(int(best_f), best, True)


def frustration_index_heuristic(G: SignedGraph, seed: int = 0, restarts: int = 8) -> FrustrationResult:
    """Upper bound on f via single-vertex-flip local search with restarts."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = G.n
    if n == 0:
        return FrustrationResult(0, np.zeros(0, dtype=int), False)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0xF0]))
    from scipy.sparse import csr_matrix

    I, J, S = G.edge_arrays()
    A = csr_matrix(
        (np.concatenate([S, S]).astype(float), (np.concatenate([I, J]), np.concatenate([J, I]))),
        shape=(n, n),
    )
    best_f, best = None, None
    for r in range(restarts):
        eps = np.ones(n) if r == 0 else rng.choice([-1.0, 1.0], size=n)
        while True:
            # gain of flipping v = sum_j sigma_vj eps_v eps_j (positive -> flip helps)
            field_ = A @ eps
            gain = -eps * field_
            v = int(np.argmax(gain))
            if gain[v] <= 0:
                break
            eps[v] = -eps[v]
        if eps[0] < 0:
            eps = -eps
        f = frustrated_edge_count(G, eps)
        if best_f is None or f < best_f:
            best_f, best = f, eps.astype(int)
    return FrustrationResult(int(best_f), best, False)
