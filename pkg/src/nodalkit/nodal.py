"""Nodal counts: path-domain graphs, minimal nodal decompositions and bound checks.

An edge ``{i, j}`` of the signed graph is *good* for a vector ``x`` when
``M_ij x_i x_j < 0`` (Laplacian convention) or ``> 0`` (adjacency
convention). A nodal decomposition partitions the analyzed vertices into
parts that are connected and contain only good edges; ``N(x)`` is the least
number of parts.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import (
    ExactCapExceeded,
    ReducibleMatrixError,
    VanishingVectorError,
)
from .graph_core import (
    SignedGraph,
    as_symmetric_matrix,
    connected_components,
    count_components,
    frustration_index_exact,
    from_symmetric_matrix,
    graph_invariants,
)
from .spectral import EigenGroup, vector_zero_tol

LAPLACIAN = "laplacian"
ADJACENCY = "adjacency"
DEFAULT_EXACT_CAP = 20
DEFAULT_TIME_BUDGET = 10.0


def normalize_convention(conv) -> str:
    c = str(conv).lower()
    if c in ("laplacian", "laplacian_like", "lap"):
        return LAPLACIAN
    if c in ("adjacency", "adjacency_like", "adj"):
        return ADJACENCY
    raise ValueError(f"unknown sign convention {conv!r}")


@dataclass(frozen=True)
class PathDomainCounts:
    kappa_lt: int
    kappa_le: int
    kappa_gt: int
    kappa_ge: int
    convention: str = LAPLACIAN

    @property
    def strong(self):
        """Component count of the good-edge graph under the active convention."""
        return self.kappa_lt if self.convention == LAPLACIAN else self.kappa_gt

    @property
    def weak(self):
        return self.kappa_le if self.convention == LAPLACIAN else self.kappa_ge


@dataclass(frozen=True)
class NodalDecomposition:
    parts: tuple
    size: int
    certified_minimal: bool
    vertices: frozenset

    def as_lists(self):
        return [sorted(p) for p in self.parts]


@dataclass(frozen=True)
class BoundReport:
    k: int
    r: int
    nu: int
    f: int
    N: int
    exactN: bool
    lower: int
    upper: int
    satisfied: bool

    def to_json(self):
        return {key: (bool(v) if isinstance(v, (bool, np.bool_)) else int(v)) for key, v in asdict(self).items()}


def _graph(G, M, zero_tol=1e-12):
    if G is None:
        G = from_symmetric_matrix(M, zero_tol)
    return G


def _edge_products(G, M, x):
    I, J, _ = G.edge_arrays()
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    return I, J, M[I, J] * x[I] * x[J]


def _sort_parts(parts):
    return tuple(sorted((frozenset(p) for p in parts), key=min))


# ---------------------------------------------------------------- path domains


def path_domain_counts(G, M, x, conv=LAPLACIAN, zero_tol=None) -> PathDomainCounts:
    """Component counts of the four sign graphs of ``x``.

    ``G^<`` and ``G^>`` live on all vertices; ``G^<=`` and ``G^>=`` on the
    support of ``x``. Entries with ``|x| <= zero_tol`` count as zeros.
    """
    conv = normalize_convention(conv)
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    x = np.asarray(x, dtype=float)
    if x.shape != (G.n,):
        raise ValueError("vector length does not match the graph")
    if zero_tol is None:
        zero_tol = vector_zero_tol(x)
    xz = np.where(np.abs(x) <= zero_tol, 0.0, x)
    I, J, prod = _edge_products(G, M, xz)
    n = G.n
    support = np.flatnonzero(xz != 0)
    lt = prod < 0
    gt = prod > 0
    return PathDomainCounts(
        kappa_lt=count_components(n, I[lt], J[lt]),
        kappa_le=count_components(n, I[prod <= 0], J[prod <= 0], vertices=support),
        kappa_gt=count_components(n, I[gt], J[gt]),
        kappa_ge=count_components(n, I[prod >= 0], J[prod >= 0], vertices=support),
        convention=conv,
    )


# ------------------------------------------------------------ good/bad graphs


class _Instance:
    """Good and bad adjacency of one decomposition problem on ``vertices``."""

    def __init__(self, G, M, x, conv, vertices, good_fn=None):
        self.vertices = sorted(vertices)
        vs = set(self.vertices)
        I, J, prod = _edge_products(G, M, x)
        if good_fn is None:
            good = prod < 0 if conv == LAPLACIAN else prod > 0
        else:
            good = good_fn(I, J, prod)
        self.good = {v: [] for v in self.vertices}
        self.bad = {v: [] for v in self.vertices}
        for a, b, g in zip(I.tolist(), J.tolist(), good.tolist()):
            if a in vs and b in vs:
                target = self.good if g else self.bad
                target[a].append(b)
                target[b].append(a)

    def good_components(self):
        seen = set()
        comps = []
        for s in self.vertices:
            if s in seen:
                continue
            comp = [s]
            seen.add(s)
            q = deque([s])
            while q:
                u = q.popleft()
                for w in sorted(self.good[u]):
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        q.append(w)
            comps.append(comp)  # BFS order
        return comps


def _check_nonvanishing(x, vertices, zero_tol):
    zeros = [v for v in vertices if abs(x[v]) <= zero_tol]
    if zeros:
        raise VanishingVectorError(zeros)


def validate_partition(G, M, x, parts, conv=LAPLACIAN, vertices=None, good_fn=None):
    """Return a list of problems with ``parts`` as a nodal decomposition (empty if valid)."""
    conv = normalize_convention(conv)
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    if vertices is None:
        vertices = range(G.n)
    vertices = set(vertices)
    inst = _Instance(G, M, np.asarray(x, dtype=float), conv, vertices, good_fn)
    problems = []
    seen = set()
    for p in parts:
        p = set(p)
        if p & seen:
            problems.append(f"part {sorted(p)} overlaps another part")
        seen |= p
        for v in p:
            for w in inst.bad.get(v, ()):
                if w in p and v < w:
                    problems.append(f"bad edge ({v}, {w}) inside part")
        if p:
            start = min(p)
            reach = {start}
            q = deque([start])
            while q:
                u = q.popleft()
                for w in inst.good.get(u, ()):
                    if w in p and w not in reach:
                        reach.add(w)
                        q.append(w)
            if reach != p:
                problems.append(f"part {sorted(p)} is not connected")
    if seen != vertices:
        problems.append("parts do not cover the analyzed vertex set")
    return problems


# ----------------------------------------------------------- exact search


class _Timeout(Exception):
    pass


def _greedy_clique(cands, bad_mask):
    best = 0
    for start in cands:
        clique = [start]
        common = bad_mask[start]
        for v in cands:
            if v != start and (common >> v) & 1:
                clique.append(v)
                common &= bad_mask[v]
        best = max(best, len(clique))
    return best


def _greedy_component(order, good_mask, bad_mask):
    """Greedy upper bound: grow parts along good edges in the given order."""
    m = len(order)
    unassigned = (1 << m) - 1
    parts = []
    for s in range(m):
        if not (unassigned >> s) & 1:
            continue
        part = 1 << s
        unassigned &= ~part
        conflict = bad_mask[s]
        reach = good_mask[s]
        while True:
            cand = reach & unassigned & ~conflict
            if not cand:
                break
            v = (cand & -cand).bit_length() - 1
            part |= 1 << v
            unassigned &= ~(1 << v)
            conflict |= bad_mask[v]
            reach |= good_mask[v]
        parts.append(part)
    return parts


def _pieces(mask, good_mask):
    pieces = []
    rest = mask
    while rest:
        s = (rest & -rest).bit_length() - 1
        piece = 1 << s
        frontier = piece
        while frontier:
            v = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            new = good_mask[v] & mask & ~piece
            piece |= new
            frontier |= new
        pieces.append(piece)
        rest &= ~piece
    return pieces


def _exact_component(order, inst, deadline):
    """Minimum partition of one good-component, vertices given in BFS order."""
    m = len(order)
    pos = {v: i for i, v in enumerate(order)}
    good_mask = [0] * m
    bad_mask = [0] * m
    for i, v in enumerate(order):
        for w in inst.good[v]:
            good_mask[i] |= 1 << pos[w]
        for w in inst.bad[v]:
            if w in pos:  # bad edges may join different good components
                bad_mask[i] |= 1 << pos[w]
    if not any(bad_mask):
        return [list(order)], True

    best_parts = _greedy_component(order, good_mask, bad_mask)
    best = len(best_parts)
    global_lb = _greedy_clique(list(range(m)), bad_mask)
    if best <= global_lb:
        return [[order[i] for i in range(m) if (p >> i) & 1] for p in best_parts], True

    parts = []
    counter = [0]

    def connectable(idx, P):
        pieces = _pieces(P, good_mask)
        if len(pieces) == 1:
            return True
        unassigned = ((1 << m) - 1) & ~((1 << idx) - 1)
        conflict = 0
        for i in range(m):
            if (P >> i) & 1:
                conflict |= bad_mask[i]
        helpers = unassigned & ~conflict
        for piece in pieces:
            touch = 0
            for i in range(m):
                if (piece >> i) & 1:
                    touch |= good_mask[i]
            if not (touch & helpers):
                return False
        return True

    def lower_bound(idx):
        forced = []
        for v in range(idx, m):
            if all(bad_mask[v] & P for P in parts):
                forced.append(v)
        if not forced:
            return len(parts)
        return len(parts) + _greedy_clique(forced, bad_mask)

    def rec(idx):
        nonlocal best, best_parts
        counter[0] += 1
        if counter[0] % 2048 == 0 and time.monotonic() > deadline:
            raise _Timeout
        if lower_bound(idx) >= best:
            return
        if idx == m:
            if all(len(_pieces(P, good_mask)) == 1 for P in parts):
                best = len(parts)
                best_parts = list(parts)
            return
        bit = 1 << idx
        for pi in range(len(parts)):
            P = parts[pi]
            if bad_mask[idx] & P:
                continue
            parts[pi] = P | bit
            if connectable(idx + 1, parts[pi]):
                rec(idx + 1)
            parts[pi] = P
        if len(parts) + 1 < best:
            parts.append(bit)
            rec(idx + 1)
            parts.pop()

    certified = True
    try:
        rec(0)
    except _Timeout:
        certified = False
    return [[order[i] for i in range(m) if (p >> i) & 1] for p in best_parts], certified


def _exact(inst, time_budget):
    deadline = time.monotonic() + time_budget
    parts = []
    certified = True
    for comp in inst.good_components():
        ps, ok = _exact_component(comp, inst, deadline)
        parts.extend(ps)
        certified = certified and ok
    return parts, certified


def minimal_nodal_decomposition_exact(
    G,
    M,
    x,
    conv=LAPLACIAN,
    vertices=None,
    zero_tol=None,
    exact_cap=DEFAULT_EXACT_CAP,
    time_budget=DEFAULT_TIME_BUDGET,
    good_fn=None,
) -> NodalDecomposition:
    """Minimum nodal decomposition by branch and bound.

    ``vertices`` restricts the analyzed set (default: all); ``x`` must not
    vanish there. On timeout the best decomposition found is returned with
    ``certified_minimal=False``. ``good_fn(I, J, prod)`` can override which
    edges count as good.
    """
    conv = normalize_convention(conv)
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    x = np.asarray(x, dtype=float)
    if vertices is None:
        vertices = range(G.n)
    vertices = sorted(set(int(v) for v in vertices))
    if zero_tol is None:
        zero_tol = vector_zero_tol(x)
    _check_nonvanishing(x, vertices, zero_tol)
    if len(vertices) > exact_cap:
        raise ExactCapExceeded(
            "exact nodal decomposition", len(vertices), exact_cap,
            "minimal_nodal_decomposition_heuristic",
        )
    inst = _Instance(G, M, x, conv, vertices, good_fn)
    parts, certified = _exact(inst, time_budget)
    parts = _sort_parts(parts)
    return NodalDecomposition(parts, len(parts), certified, frozenset(vertices))


# ---------------------------------------------------------- heuristic search


def good_bad_matrices(G, M, x, conv, good_fn=None):
    n = G.n
    I, J, prod = _edge_products(G, M, x)
    if good_fn is None:
        good = prod < 0 if conv == LAPLACIAN else prod > 0
    else:
        good = good_fn(I, J, prod)
    Good = np.zeros((n, n), dtype=bool)
    Bad = np.zeros((n, n), dtype=bool)
    Good[I[good], J[good]] = True
    Bad[I[~good], J[~good]] = True
    return Good | Good.T, Bad | Bad.T


def greedy_parts(Good, Bad, vertices, rng):
    """Grow parts along good edges in a random order, then merge compatible parts."""
    n = Good.shape[0]
    vertices = np.asarray(sorted(vertices), dtype=int)
    unassigned = np.zeros(n, dtype=bool)
    unassigned[vertices] = True
    order = vertices[rng.permutation(vertices.size)] if vertices.size else vertices
    rank = np.full(n, n, dtype=int)
    rank[order] = np.arange(order.size)
    parts = []
    for s in order:
        if not unassigned[s]:
            continue
        unassigned[s] = False
        members = [int(s)]
        conflict = Bad[s].copy()
        reach = Good[s].copy()
        while True:
            cand = np.flatnonzero(reach & unassigned & ~conflict)
            if cand.size == 0:
                break
            v = int(cand[np.argmin(rank[cand])])
            members.append(v)
            unassigned[v] = False
            conflict |= Bad[v]
            reach |= Good[v]
        parts.append(members)
    return _merge_parts(parts, Good, Bad)


def _merge_parts(parts, Good, Bad):
    n = Good.shape[0]
    changed = True
    while changed and len(parts) > 1:
        changed = False
        P = np.zeros((len(parts), n))
        for a, p in enumerate(parts):
            P[a, p] = 1.0
        GB = (P @ Good.astype(float) @ P.T) > 0
        BB = (P @ Bad.astype(float) @ P.T) > 0
        ok = GB & ~BB
        np.fill_diagonal(ok, False)
        idx = np.argwhere(ok)
        if idx.size:
            a, b = (int(v) for v in idx[0])
            parts[a] = parts[a] + parts[b]
            del parts[b]
            changed = True
    return parts


def minimal_nodal_decomposition_heuristic(
    G, M, x, conv=LAPLACIAN, seed=0, vertices=None, zero_tol=None, good_fn=None
) -> NodalDecomposition:
    """Valid (not necessarily minimal) decomposition; deterministic per seed."""
    conv = normalize_convention(conv)
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    x = np.asarray(x, dtype=float)
    if vertices is None:
        vertices = range(G.n)
    vertices = sorted(set(int(v) for v in vertices))
    if zero_tol is None:
        zero_tol = vector_zero_tol(x)
    _check_nonvanishing(x, vertices, zero_tol)
    Good, Bad = good_bad_matrices(G, M, x, conv, good_fn)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0x4E]))
    parts = _sort_parts(greedy_parts(Good, Bad, vertices, rng))
    return NodalDecomposition(parts, len(parts), False, frozenset(vertices))


def nodal_decomposition(G, M, x, conv=LAPLACIAN, vertices=None, zero_tol=None,
                        exact_cap=DEFAULT_EXACT_CAP, seed=0, time_budget=DEFAULT_TIME_BUDGET,
                        good_fn=None):
    """Exact decomposition when the analyzed set fits the cap, heuristic otherwise."""
    if vertices is None:
        size = len(np.asarray(x))
    else:
        size = len(set(vertices))
    if size <= exact_cap:
        return minimal_nodal_decomposition_exact(
            G, M, x, conv, vertices, zero_tol, exact_cap, time_budget, good_fn
        )
    return minimal_nodal_decomposition_heuristic(G, M, x, conv, seed, vertices, zero_tol, good_fn)


def support_nodal_count(G, M, x, conv=LAPLACIAN, zero_tol=None, exact_cap=DEFAULT_EXACT_CAP,
                        seed=0) -> NodalDecomposition:
    """``N`` of ``x`` restricted to its support."""
    x = np.asarray(x, dtype=float)
    if zero_tol is None:
        zero_tol = vector_zero_tol(x)
    support = np.flatnonzero(np.abs(x) > zero_tol)
    if support.size == 0:
        raise ValueError("vector has empty support")
    return nodal_decomposition(G, M, x, conv, support.tolist(), zero_tol, exact_cap, seed)


# -------------------------------------------------------------- bound checks


def _require_irreducible(G):
    comps = connected_components(G)
    if len(comps) != 1:
        raise ReducibleMatrixError(comps)


def _sign_split_nu(G, M, x):
    I, J, prod = _edge_products(G, M, x)
    out = []
    for mask in (prod > 0, prod < 0):
        e = int(mask.sum())
        out.append(e - G.n + count_components(G.n, I[mask], J[mask]))
    return tuple(out)


def refined_lower_bound(M, k, r, phi, G=None):
    """``k + (r-1) - nu + nu_plus + nu_minus`` for a non-vanishing ``phi``."""
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    nu = graph_invariants(G).nu
    nu_p, nu_m = _sign_split_nu(G, M, phi)
    return k + (r - 1) - nu + nu_p + nu_m


def verify_generic_bounds(M, group: EigenGroup, phi, f=None, G=None, exact_cap=DEFAULT_EXACT_CAP,
                          zero_tol=None) -> BoundReport:
    """Check ``k + (r-1) - nu <= N(phi) <= k + f`` for a non-vanishing eigenvector."""
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    _require_irreducible(G)
    phi = np.asarray(phi, dtype=float)
    if zero_tol is None:
        zero_tol = vector_zero_tol(phi)
    _check_nonvanishing(phi, range(G.n), zero_tol)
    nu = graph_invariants(G).nu
    if f is None:
        f = frustration_index_exact(G).f
    dec = nodal_decomposition(G, M, phi, LAPLACIAN, exact_cap=exact_cap, zero_tol=zero_tol)
    k, r = group.index_k, group.multiplicity_r
    lower = k + (r - 1) - nu
    upper = k + f
    return BoundReport(
        k=k, r=r, nu=nu, f=int(f), N=dec.size, exactN=dec.certified_minimal,
        lower=lower, upper=upper, satisfied=bool(lower <= dec.size <= upper),
    )


def inertia_counts(M, lam, phi, G=None):
    """``(kappa_plus, kappa_minus)`` of ``B = D_phi (M - lam I) D_phi``."""
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    phi = np.asarray(phi, dtype=float)
    B = (phi[:, None] * (M - lam * np.eye(G.n))) * phi[None, :]
    I, J, _ = G.edge_arrays()
    vals = B[I, J]
    pos, neg = vals > 0, vals < 0
    return count_components(G.n, I[pos], J[pos]), count_components(G.n, I[neg], J[neg])


def inertia_check(M, group: EigenGroup, phi, G=None, zero_tol=None) -> bool:
    """Whether ``kappa_+ - 1 <= n-k-r+1`` and ``kappa_- - 1 <= k-1`` hold."""
    M = as_symmetric_matrix(M)
    G = _graph(G, M)
    phi = np.asarray(phi, dtype=float)
    if zero_tol is None:
        zero_tol = vector_zero_tol(phi)
    _check_nonvanishing(phi, range(G.n), zero_tol)
    kp, km = inertia_counts(M, group.lam, phi, G)
    n, k, r = G.n, group.index_k, group.multiplicity_r
    return bool(kp - 1 <= n - k - r + 1 and km - 1 <= k - 1)
