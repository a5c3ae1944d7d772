"""Eigenbases of repeated eigenvalues with controlled nodal counts.

Two constructions live here.

* :func:`construct_signed_basis` builds an orthonormal basis ``phi_1..phi_r``
  of an eigenspace, together with signings ``eps_s`` that agree with
  ``sgn(phi_s)`` off the common zero set, such that
  ``N(eps_s) <= k + (s-1) + f``.
* :func:`construct_strong_support_basis` builds an orthonormal basis whose
  support-restricted counts satisfy ``N^s(phi_l) <= k + (l-1) + f``.

Both work on the switching representative of ``M`` with exactly ``f``
positive off-diagonal pairs and switch results back before returning.

Eigenspace coordinates: the eigenspace is cut by its common zero set
``i0`` into components ``X_1..X_p`` (inside ``i0``) and ``Y_1..Y_q``
(outside). On each ``Y_j`` we fix a non-vanishing basis ``psi^(j)`` of the
projected eigenspace; eigenvectors are then coefficient vectors
``alpha[(j, sigma)]`` subject to ``gamma`` linear equations coming from the
rows of ``i0``. The equations are kept in reduced row echelon form with the
variables listed in reverse order, so each pivot is the largest variable
appearing in its equation.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _linalg as la
from .exceptions import ConstructionError, NodalKitError, ReducibleMatrixError
from .graph_core import (
    as_symmetric_matrix,
    connected_components,
    frustration_index_exact,
    frustration_index_heuristic,
    from_symmetric_matrix,
    graph_invariants,
)
from .nodal import (
    DEFAULT_TIME_BUDGET,
    LAPLACIAN,
    BoundReport,
    minimal_nodal_decomposition_exact,
    nodal_decomposition,
    support_nodal_count,
    validate_partition,
)
from .spectral import (
    DEFAULT_VECTOR_ZERO_TOL,
    EigenGroup,
    eigendecompose,
    eigenspace_common_zeros,
)

EXACT_SIZE_LIMIT = 24


# ------------------------------------------------------------------ structure


@dataclass
class EigenspaceStructure:
    """Skeleton of an eigenspace with common zeros (all indices 0-based)."""

    n: int
    lam: float
    k: int
    r: int
    exact: bool
    i0_lambda: frozenset
    X_parts: tuple
    Y_parts: tuple
    H_edges: tuple
    u: tuple
    v: tuple
    psi: tuple  # per Y_j an (r_j x |Y_j|) array (object dtype when exact)
    variables: tuple  # (j, sigma) in natural order
    pivots: tuple  # (eta, sigma) of each echelon row
    coeffs: np.ndarray  # gamma x r_hat, natural variable order
    gamma: int
    r_hat: int
    k_hat: int
    f_hat: int
    f_tilde: int
    eigenspace: np.ndarray = field(repr=False)  # n x r basis, object dtype when exact
    tol: float = DEFAULT_VECTOR_ZERO_TOL

    @property
    def p(self):
        return len(self.X_parts)

    @property
    def q(self):
        return len(self.Y_parts)

    @property
    def r_sizes(self):
        return tuple(len(P) for P in self.psi)

    def pivots_one_based(self):
        return {(j + 1, s + 1) for j, s in self.pivots}

    def pivot_variables(self):
        idx = {v: i for i, v in enumerate(self.variables)}
        return [idx[pv] for pv in self.pivots]

    def pivot_formula(self, row):
        """``{(j, sigma): coef}`` with ``alpha_pivot = sum coef * alpha_(j, sigma)`` (1-based keys)."""
        piv = set(self.pivot_variables())
        out = {}
        for w, var in enumerate(self.variables):
            c = self.coeffs[row, w]
            if w in piv or c == 0:
                continue
            out[(var[0] + 1, var[1] + 1)] = -c
        return out

    def embed(self, j, vec):
        """Place a length-|Y_j| vector into a length-n vector."""
        out = np.zeros(self.n, dtype=object if self.exact else float)
        if self.exact:
            out[:] = Fraction(0)
        out[list(self.Y_parts[j])] = vec
        return out


def _is_integer_matrix(M):
    return bool(np.all(np.abs(M - np.round(M)) < 1e-12))


def _exact_mode(M, lam, exact):
    n = M.shape[0]
    auto_ok = _is_integer_matrix(M) and n <= EXACT_SIZE_LIMIT and abs(lam - round(lam)) < 1e-8
    if exact is None:
        return auto_ok
    if exact and not auto_ok:
        raise ValueError("exact mode needs an integer matrix with an integer eigenvalue, n <= 24")
    return bool(exact)


def _exact_eigenspace(M, lam_int):
    n = M.shape[0]
    A = [[Fraction(int(round(M[i, j]))) - (Fraction(lam_int) if i == j else 0) for j in range(n)]
         for i in range(n)]
    basis = la.nullspace_fraction(A, n)
    B = np.empty((n, len(basis)), dtype=object)
    for c, vec in enumerate(basis):
        B[:, c] = vec
    return B


def _order_parts(G, i0, Xc, Yc):
    """Order the X and Y components.

    X_1 holds the smallest vanishing vertex. Further X components are placed
    in discovery order: walk the placed X's in order, their neighbouring Y's
    by smallest vertex, each Y's vertices ascending and their neighbours
    ascending. Each new X is therefore at H-distance 2 from an earlier one.
    Y's are sorted by (v(j), H-degree, smallest vertex).
    """
    xid = {a: c for c, comp in enumerate(Xc) for a in comp}
    yid = {b: c for c, comp in enumerate(Yc) for b in comp}
    HX = {c: set() for c in range(len(Xc))}
    HY = {c: set() for c in range(len(Yc))}
    for a, b, _ in G.edges:
        for s, t in ((a, b), (b, a)):
            if s in xid and t in yid:
                HX[xid[s]].add(yid[t])
                HY[yid[t]].add(xid[s])
    if not Xc:
        return [], list(range(len(Yc))), HX, HY
    start = xid[min(i0)]
    placed = [start]
    seen = {start}
    ptr = 0
    while ptr < len(placed):
        x = placed[ptr]
        ptr += 1
        for y in sorted(HX[x], key=lambda c: min(Yc[c])):
            for a in sorted(Yc[y]):
                for b, _ in G.neighbors[a]:
                    if b in xid and xid[b] not in seen:
                        seen.add(xid[b])
                        placed.append(xid[b])
    if len(placed) != len(Xc):
        raise ConstructionError("bipartite component graph is disconnected")
    xpos = {c: i for i, c in enumerate(placed)}

    def ykey(c):
        return (min(xpos[x] for x in HY[c]), len(HY[c]), min(Yc[c]))

    yorder = sorted(range(len(Yc)), key=ykey)
    return placed, yorder, HX, HY


def _small_multiples():
    c = 1
    while True:
        yield c
        yield -c
        c += 1


def _nonvanishing_exact(Bj):
    """Rational non-vanishing basis of the column space of ``Bj`` (|Y| x r).

    Starting from the reduced row echelon rows ``b_1..b_r``, build one
    non-vanishing ``v = b_1 + sum c_t b_t`` with small integer ``c_t``, then
    return ``v, v + c_2 b_2, ..., v + c_r b_r``; these stay independent and
    keep entries of moderate size.
    """
    rows = [list(r) for r in np.asarray(Bj, dtype=object).T.tolist()]
    R, _ = la.rref_fraction(rows)
    basis = [list(r) for r in R]
    rj = len(basis)
    if rj == 0:
        return []
    size = len(basis[0])
    v = list(basis[0])
    for b in basis[1:]:
        zeros = {i for i in range(size) if v[i] == 0}
        fixable = {i for i in zeros if b[i] != 0}
        if not fixable:
            continue
        for c in _small_multiples():
            w = [x + c * y for x, y in zip(v, b)]
            if {i for i in range(size) if w[i] == 0} == zeros - fixable:
                v = w
                break
    if any(x == 0 for x in v):
        raise ConstructionError("projected eigenspace vanishes at a vertex")
    out = [v]
    for b in basis[1:]:
        for c in _small_multiples():
            w = [x + c * y for x, y in zip(v, b)]
            if all(x != 0 for x in w):
                out.append(w)
                break
    return out


def _nonvanishing_float(Bj, rng, tol, attempts=50):
    """Orthonormal non-vanishing basis of the column space of ``Bj``."""
    Q = la.orth_basis_float(Bj)
    rj = Q.shape[1]
    if rj == 0:
        return np.zeros((0, Bj.shape[0]))
    scale = float(np.abs(Q).max())
    for _ in range(attempts):
        R, _ = np.linalg.qr(rng.standard_normal((rj, rj)))
        P = Q @ R
        if np.all(np.abs(P) > tol * scale):
            return P.T
    # targeted small rotations pairing a vanishing column with a live one
    P = P.copy()
    for _ in range(10 * P.size):
        bad = np.argwhere(np.abs(P) <= tol * scale)
        if bad.size == 0:
            return P.T
        i, a = (int(v) for v in bad[0])
        b = int(np.argmax(np.abs(P[i])))
        if b == a:
            break
        th = 1e-3
        ca, cb = P[:, a].copy(), P[:, b].copy()
        P[:, a] = np.cos(th) * ca + np.sin(th) * cb
        P[:, b] = -np.sin(th) * ca + np.cos(th) * cb
    raise ConstructionError("could not find a non-vanishing projected basis")


def _as_exact_psi(rows):
    return np.array([[la.to_fraction(v) for v in row] for row in rows], dtype=object).reshape(
        len(rows), -1
    )


def analyze_eigenspace(M, group: EigenGroup, tol: float = DEFAULT_VECTOR_ZERO_TOL, exact=None,
                       psi=None, seed: int = 0) -> EigenspaceStructure:
    """Common zeros, X/Y components, projected bases and pivot structure of ``group``.

    ``exact=None`` selects rational arithmetic for integer matrices with an
    integer eigenvalue (n <= 24). ``psi`` optionally supplies the projected
    bases, keyed by the sorted 0-based vertex tuple of each Y component, each
    value a list of ``r_j`` row vectors.
    """
    M = as_symmetric_matrix(M)
    n = M.shape[0]
    G = from_symmetric_matrix(M)
    comps = connected_components(G)
    if len(comps) != 1:
        raise ReducibleMatrixError(comps)
    lam = float(group.lam)
    exact = _exact_mode(M, lam, exact)
    if exact:
        lam_int = int(round(lam))
        E = _exact_eigenspace(M, lam_int)
        if E.shape[1] != group.multiplicity_r:
            exact = False
    if exact:
        i0 = frozenset(i for i in range(n) if all(E[i, c] == 0 for c in range(E.shape[1])))
    else:
        E = np.asarray(group.basis, dtype=float)
        i0 = eigenspace_common_zeros(group, tol)
    rest = [i for i in range(n) if i not in i0]
    Xc = [tuple(sorted(c)) for c in connected_components(G, i0)]
    Yc = [tuple(sorted(c)) for c in connected_components(G, rest)]
    xorder, yorder, HX, HY = _order_parts(G, i0, Xc, Yc)
    X = tuple(Xc[c] for c in xorder)
    Y = tuple(Yc[c] for c in yorder)
    xnew = {c: i for i, c in enumerate(xorder)}
    ynew = {c: j for j, c in enumerate(yorder)}
    H = tuple(sorted((xnew[x], ynew[y]) for x in HX for y in HX[x]))
    u = tuple(min(j for i2, j in H if i2 == i) for i in range(len(X)))
    v = tuple(min((i for i, j2 in H if j2 == j), default=-1) for j in range(len(Y)))

    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0x95]))
    if not exact:
        # the projector does not depend on which basis of the eigenspace was passed in
        Q = la.orth_basis_float(E)
        proj = Q @ Q.T
    psis = []
    for Yj in Y:
        if psi is not None and tuple(Yj) in psi:
            rows = psi[tuple(Yj)]
            P = _as_exact_psi(rows) if exact else np.asarray(rows, dtype=float)
        elif exact:
            P = _as_exact_psi(_nonvanishing_exact(E[list(Yj), :]))
        else:
            P = _nonvanishing_float(proj[list(Yj), :], rng, tol)
        psis.append(P)
    variables = tuple((j, s) for j, P in enumerate(psis) for s in range(P.shape[0]))
    r_hat = len(variables)

    # equations: one per vanishing vertex, sum_y M[x, y] phi(y) = 0
    rows = []
    for Xi in X:
        for a in Xi:
            row = []
            for j, s in variables:
                Yj = list(Y[j])
                if exact:
                    row.append(sum((Fraction(int(round(M[a, b]))) * psis[j][s, t]
                                    for t, b in enumerate(Yj)), Fraction(0)))
                else:
                    row.append(float(M[a, Yj] @ psis[j][s]))
            rows.append(row)
    if rows:
        rev = [list(reversed(r)) for r in rows]
        if exact:
            R, pcols = la.rref_fraction(rev)
        else:
            R, pcols = la.rref_float(np.array(rev, dtype=float), tol=1e-9)
            R = [list(r) for r in R]
        coeffs_rows = [list(reversed(r)) for r in R]
    else:
        coeffs_rows, pcols = [], []
    gamma = len(coeffs_rows)
    if exact:
        coeffs = np.array(coeffs_rows, dtype=object).reshape(gamma, r_hat)
    else:
        coeffs = np.array(coeffs_rows, dtype=float).reshape(gamma, r_hat)
    pivots = tuple(variables[r_hat - 1 - c] for c in pcols)
    if gamma != r_hat - group.multiplicity_r:
        raise ConstructionError(
            f"equation rank {gamma} does not match r_hat - r = {r_hat - group.multiplicity_r}"
        )

    # diagnostics
    if rest:
        sub = M[np.ix_(rest, rest)]
        w = np.linalg.eigvalsh(sub)
        k_hat = 1 + int(np.sum(w < lam - 1e-8 * max(1.0, float(np.abs(w).max()))))
    else:
        k_hat = 1
    rest_set = set(rest)
    f_hat = sum(1 for a, b in itertools.combinations(rest, 2) if M[a, b] > 0)
    f_tilde = 0
    for i, Xi in enumerate(X):
        side = set(Xi) | set(Y[u[i]])
        for a in Xi:
            for b in side:
                if b != a and M[a, b] > 0 and not (b in Xi and b < a):
                    f_tilde += 1
    _ = rest_set
    return EigenspaceStructure(
        n=n, lam=lam, k=group.index_k, r=group.multiplicity_r, exact=exact, i0_lambda=i0,
        X_parts=X, Y_parts=Y, H_edges=H, u=u, v=v, psi=tuple(psis), variables=variables,
        pivots=pivots, coeffs=coeffs, gamma=gamma, r_hat=r_hat, k_hat=k_hat, f_hat=f_hat,
        f_tilde=f_tilde, eigenspace=E, tol=tol,
    )


def switch_structure(S: EigenspaceStructure, eps) -> EigenspaceStructure:
    """Structure of ``D M D`` for ``D = diag(eps)``; the equations are unchanged."""
    eps = np.asarray(eps, dtype=int)
    psis = []
    for Yj, P in zip(S.Y_parts, S.psi):
        d = eps[list(Yj)]
        psis.append(P * d[None, :] if not S.exact else np.array(
            [[P[s, t] * int(d[t]) for t in range(P.shape[1])] for s in range(P.shape[0])],
            dtype=object).reshape(P.shape))
    E = S.eigenspace * eps[:, None] if not S.exact else np.array(
        [[S.eigenspace[i, c] * int(eps[i]) for c in range(S.eigenspace.shape[1])]
         for i in range(S.n)], dtype=object).reshape(S.eigenspace.shape)
    out = EigenspaceStructure(**{**S.__dict__})
    out.psi = tuple(psis)
    out.eigenspace = E
    return out


# ------------------------------------------------------------ signed basis


@dataclass
class ConstructionConfig:
    seed: int = 0
    zero_tol: float = DEFAULT_VECTOR_ZERO_TOL
    frustration_cap: int = 24
    exact_cap: int = 20
    delta_halvings: int = 40
    exact: bool | None = None


@dataclass
class SignedBasisResult:
    eigenvalue: float
    k: int
    r: int
    f: int
    f_exact: bool
    vectors: np.ndarray  # n x r, orthonormal columns
    signings: np.ndarray  # r x n, entries +-1
    bounds: list
    N: list
    N_exact: list
    partitions: list
    coefficients: list  # per constructed vector: {(j, sigma) 1-based: (value, class)}
    raw_vectors: list  # unnormalized vectors before completion (rational when exact)
    i0_lambda: frozenset
    switching: np.ndarray
    structure: EigenspaceStructure = field(repr=False, default=None)

    def to_json(self):
        vecs = []
        for s in range(self.r):
            vecs.append({
                "phi": [float(x) for x in self.vectors[:, s]],
                "eps": [int(x) for x in self.signings[s]],
                "partition": [sorted(int(v) for v in p) for p in self.partitions[s]],
                "bound": int(self.bounds[s]),
                "N": int(self.N[s]),
            })
        return {"eigenvalue": float(self.eigenvalue), "k": int(self.k), "r": int(self.r),
                "f": int(self.f), "vectors": vecs}


class _Field:
    """Scalar helpers for exact (Fraction) or float arithmetic."""

    def __init__(self, exact, tol):
        self.exact = exact
        self.tol = tol

    def zeros(self, n):
        if self.exact:
            z = np.empty(n, dtype=object)
            z[:] = Fraction(0)
            return z
        return np.zeros(n)

    def num(self, x):
        return Fraction(x) if self.exact else float(x)

    def is_zero(self, x, scale=1.0):
        return x == 0 if self.exact else abs(x) <= self.tol * scale

    def dot(self, a, b):
        if self.exact:
            return sum((x * y for x, y in zip(a, b)), Fraction(0))
        return float(np.dot(a, b))

    def sign(self, x, scale=1.0):
        if self.is_zero(x, scale):
            return 0
        return int(x > 0) - int(x < 0)

    def solve(self, A, b):
        if self.exact:
            return la.solve_fraction([list(r) for r in A], list(b))
        A = np.array(A, dtype=float)
        if A.size == 0:
            return []
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 1e-10 * max(1.0, s[0]):
            return None
        return list(np.linalg.solve(A, np.array(b, dtype=float)))


class _Builder:
    """Coefficient-level construction of the first ``q - gamma - 1`` vectors."""

    def __init__(self, S: EigenspaceStructure, M, cfg: ConstructionConfig):
        self.S, self.M, self.cfg = S, M, cfg
        self.F = _Field(S.exact, 1e-9)
        n = S.n
        piv = S.pivot_variables()
        self.pivot_set = set(piv)
        self.free = [w for w in range(S.r_hat) if w not in self.pivot_set]
        W = {}
        for w in self.free:
            j, s = S.variables[w]
            vec = S.embed(j, S.psi[j][s])
            for row, pw in enumerate(piv):
                c = S.coeffs[row, w]
                if c != 0:
                    pj, ps = S.variables[pw]
                    vec = vec - c * S.embed(pj, S.psi[pj][ps])
            W[w] = vec
        self.W = W
        scale = max((float(np.abs(np.asarray(W[w], dtype=float)).max()) for w in self.free),
                    default=1.0)
        self.scale = max(scale, 1e-300)
        self.deps = {}
        self.lead = {}
        for i in range(n):
            if i in S.i0_lambda:
                continue
            nz = [w for w in self.free if not self.F.is_zero(W[w][i], self.scale)]
            if not nz:
                raise ConstructionError(f"vertex {i} is zero on the whole eigenspace")
            self.deps[i] = nz
            self.lead[i] = max(nz)
        self.led_by = {w: sorted(i for i, l in self.lead.items() if l == w) for w in self.free}
        pivot_ys = {S.variables[w][0] for w in piv}
        yhat = [j for j in range(S.q) if j not in pivot_ys]
        self.J = yhat[: S.q - S.gamma]
        self.last_var = {}
        for w, (j, s) in enumerate(S.variables):
            if s == S.psi[j].shape[0] - 1:
                self.last_var[j] = w
        # anchors b in Y_{u(i)} for each X_i and the (a_m, b_m) pairs
        self.anchor = _anchors(S, M)
        self.pairs = {}
        for m in range(2, len(self.J) + 1):
            jm = self.J[m - 1]
            Xv = set(S.X_parts[S.v[jm]])
            best = None
            for a in S.Y_parts[jm]:
                for b, _ in self._nbrs(a):
                    if b in Xv and (best is None or (a, b) < best):
                        best = (a, b)
            self.pairs[m] = best

    def _nbrs(self, a):
        M = self.M
        return [(b, 1) for b in np.flatnonzero(np.abs(M[a]) > 1e-12).tolist() if b != a]

    def value_at(self, alpha, i):
        return sum((alpha[w] * self.W[w][i] for w in alpha), self.F.num(0))

    def vector(self, alpha):
        out = self.F.zeros(self.S.n)
        for w, a in alpha.items():
            if a != 0:
                out = out + a * self.W[w]
        return out

    def _pick(self, w, alpha, forbidden, half):
        """Smallest admissible value: 1, 2, 3, ... unless a half-line forces otherwise."""
        F = self.F

        def ok(val):
            for i, base in forbidden:
                if F.is_zero(base + val * self.W[w][i], self.scale):
                    return False
            if half is not None:
                base, coef, target = half
                if F.sign(base + val * coef, self.scale) != target:
                    return False
            return True

        start, step = 1, 1
        if half is not None:
            base, coef, target = half
            # admissible set is val * coef * target > -base * target
            bound = -base / coef
            if coef * target > 0:
                start = max(1, math.floor(bound) + 1)
            else:
                start, step = min(-1, math.ceil(bound) - 1), -1
        val = start
        for _ in range(10 * self.S.n + 100):
            v = F.num(val)
            if ok(v):
                return v
            val += step
        raise ConstructionError(f"no admissible value for coefficient {w}")

    def build(self, count):
        S, F = self.S, self.F
        qg = len(self.J)
        phis, records = [], []
        for s in range(1, count + 1):
            S_m = list(range(2, qg - s + 2))
            O_m = list(range(qg - s + 2, qg + 1))
            half_vars = {self.last_var[self.J[m - 1]]: m for m in S_m}
            PiO = [self.last_var[self.J[m - 1]] for m in O_m]
            PiS = {w for m in S_m for w, (j, _) in enumerate(S.variables) if j == self.J[m - 1]}
            pio_set = set(PiO)
            alpha = {}
            for w in self.free:
                if w in pio_set:
                    continue
                if not self.led_by[w]:
                    alpha[w] = F.num(0)
                    continue
                forbidden = []
                for i in self.led_by[w]:
                    if all(d in alpha or d == w for d in self.deps[i]):
                        forbidden.append((i, self.value_at(alpha, i)))
                half = None
                if w in half_vars:
                    m = half_vars[w]
                    a_m, _ = self.pairs[m]
                    anc = self.anchor[S.v[self.J[m - 1]]]
                    if not all(d in alpha for d in self.deps[anc]):
                        raise ConstructionError("anchor depends on an unset coefficient")
                    target = F.sign(self.value_at(alpha, anc), self.scale)
                    if target == 0:
                        raise ConstructionError("anchor value vanished")
                    half = (self.value_at(alpha, a_m), self.W[w][a_m], target)
                alpha[w] = self._pick(w, alpha, forbidden, half)
            if PiO:
                sol = self._solve_orth(phis, alpha, PiO, s)
                for o, val in zip(PiO, sol):
                    alpha[o] = val
            phi = self.vector(alpha)
            phis.append(phi)
            rec = {}
            for w, var in enumerate(S.variables):
                key = (var[0] + 1, var[1] + 1)
                if w in self.pivot_set:
                    row = self.S.pivot_variables().index(w)
                    val = -sum((S.coeffs[row, x] * alpha[x] for x in self.free), F.num(0))
                    rec[key] = (val, "E")
                elif w in pio_set:
                    rec[key] = (alpha[w], "O")
                elif w in PiS:
                    rec[key] = (alpha[w], "S")
                else:
                    rec[key] = (alpha[w], "F")
            records.append(rec)
        return phis, records

    def _solve_orth(self, phis, alpha, PiO, s):
        F = self.F
        base = self.vector(alpha)
        for _attempt in range(2):
            T = [[F.dot(phis[t], self.W[o]) for o in PiO] for t in range(s - 1)]
            rhs = [-F.dot(phis[t], base) for t in range(s - 1)]
            sol = F.solve(T, rhs)
            if sol is not None:
                return sol
            self._perturb_previous(phis, PiO, s)
        raise ConstructionError("orthogonality system stayed singular after perturbation")

    def _perturb_previous(self, phis, PiO, s):
        """Replace ``phi_{s-1}`` by ``phi_{s-1} + delta x`` to restore independence."""
        F = self.F
        prev = phis[: s - 2]
        Wo = [self.W[o] for o in PiO]

        def row(vec):
            return [F.dot(vec, w) for w in Wo]

        # candidate x: each coordinate vector projected off phi_1..phi_{s-2}
        chosen = None
        base_rows = [row(p) for p in prev]
        for w in self.free:
            x = self.W[w]
            for p in prev:
                x = x - (F.dot(x, p) / F.dot(p, p)) * p
            if all(F.is_zero(v, 1.0) for v in np.asarray(x, dtype=float)):
                continue
            rows = base_rows + [row(x)]
            if F.solve(rows, [F.num(0)] * len(rows)) is not None or len(rows) == 0:
                chosen = x
                break
        if chosen is None:
            raise ConstructionError("no independent direction for the perturbation fallback")
        old = phis[s - 2]
        oldf = np.asarray(old, dtype=float)
        nz = np.abs(oldf) > 0
        delta = F.num(Fraction(1, 1000)) * (
            F.num(la.to_fraction(np.abs(oldf[nz]).min())) if self.S.exact else np.abs(oldf[nz]).min()
        )
        xf_scale = max(float(np.abs(np.asarray(chosen, dtype=float)).max()), 1e-300)
        delta = delta / (F.num(la.to_fraction(xf_scale)) if self.S.exact else xf_scale)
        for _ in range(self.cfg.delta_halvings + 1):
            cand = old + delta * chosen
            cf = np.asarray(cand, dtype=float)
            if np.all(np.sign(cf[nz]) == np.sign(oldf[nz])):
                phis[s - 2] = cand
                return
            delta = delta / 2
        raise ConstructionError("perturbation fallback could not preserve signs")


def _float(v):
    return np.asarray([float(x) for x in v], dtype=float)


def _completion(E, built, count, rng):
    """Extend orthonormal ``built`` (n x b) by ``count`` vectors of span(E)."""
    Q = la.orth_basis_float(E)
    if count <= 0:
        return np.zeros((Q.shape[0], 0))
    Z = Q @ (Q.T @ rng.standard_normal((Q.shape[0], count + 2)))
    if built.shape[1]:
        Z = Z - built @ (built.T @ Z)
        Z = Z - built @ (built.T @ Z)
    U = la.orth_basis_float(Z)
    if U.shape[1] < count:
        raise ConstructionError("eigenspace completion lost rank")
    out = U[:, :count]
    out = out - (built @ (built.T @ out) if built.shape[1] else 0)
    out, _ = np.linalg.qr(out)
    return out


def _givens_repair(Phi, support, max_halvings=30):
    """Rotate every vector towards ``phi_1`` by ``rho / 2^r`` to remove zeros off ``i0``."""
    n, r = Phi.shape
    if r == 1:
        return Phi
    sub = np.abs(Phi[support])
    rho = float(sub[sub > 0].min())
    signs0 = np.sign(Phi[support])
    theta = rho / 2**r
    for _ in range(max_halvings):
        P = Phi.copy()
        c, s = math.cos(theta), math.sin(theta)
        for i in range(1, r):
            a, b = P[:, 0].copy(), P[:, i].copy()
            P[:, 0] = c * a - s * b
            P[:, i] = s * a + c * b
        new = np.sign(P[support])
        if np.all((new == signs0) | (signs0 == 0)) and np.all(new != 0):
            return P
        theta /= 2
    raise ConstructionError("Givens repair could not remove vanishing entries")


def _signing(Phi_col, S, anchor, support):
    eps = np.zeros(S.n, dtype=int)
    eps[support] = np.sign(Phi_col[support]).astype(int)
    for i, Xi in enumerate(S.X_parts):
        val = np.sign(Phi_col[anchor[i]])
        eps[list(Xi)] = int(val)
    return eps


def _switched_problem(M, cap):
    G = from_symmetric_matrix(M)
    if G.n <= cap:
        fr = frustration_index_exact(G, cap)
    else:
        fr = frustration_index_heuristic(G, seed=0, restarts=16)
    D = np.asarray(fr.witness, dtype=int)
    Msw = M * np.outer(D, D)
    return G, fr, D, Msw


def construct_signed_basis(M, group: EigenGroup, structure: EigenspaceStructure | None = None,
                           config: ConstructionConfig | None = None, psi=None) -> SignedBasisResult:
    """Orthonormal eigenbasis with signings satisfying ``N(eps_s) <= k + (s-1) + f``.

    ``structure`` (from :func:`analyze_eigenspace` on ``M``) may be supplied
    to fix the projected bases; otherwise it is derived here, using ``psi``
    if given.
    """
    cfg = config or ConstructionConfig()
    M = as_symmetric_matrix(M)
    n = M.shape[0]
    G, fr, D, Msw = _switched_problem(M, cfg.frustration_cap)
    if len(connected_components(G)) != 1:
        raise ReducibleMatrixError(connected_components(G))
    if structure is None:
        if psi is not None:
            S0 = analyze_eigenspace(M, group, cfg.zero_tol, cfg.exact, psi, cfg.seed)
            S = switch_structure(S0, D)
        else:
            sw_group = EigenGroup(group.lam, group.index_k, group.multiplicity_r,
                                  group.basis * D[:, None])
            S = analyze_eigenspace(Msw, sw_group, cfg.zero_tol, cfg.exact, None, cfg.seed)
    else:
        S = switch_structure(structure, D)
    r = S.r
    builder = _Builder(S, Msw, cfg)
    qg = len(builder.J)
    count = max(1, min(qg - 1, r))
    raw, records = builder.build(count)

    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed) & (2**64 - 1), 0xC0]))
    built = np.column_stack([_float(v) / np.linalg.norm(_float(v)) for v in raw])
    if S.exact:
        Ef = np.array([[float(x) for x in row] for row in S.eigenspace.tolist()]).reshape(n, r)
    else:
        Ef = np.asarray(S.eigenspace, dtype=float)
    # re-orthonormalize built vectors numerically (exact ones are already orthogonal)
    built, _ = np.linalg.qr(built)
    for c in range(built.shape[1]):
        ref = _float(raw[c])
        if np.dot(built[:, c], ref) < 0:
            built[:, c] = -built[:, c]
    comp = _completion(Ef, built, r - count, rng)
    Phi = np.column_stack([built, comp]) if comp.shape[1] else built
    support = np.array([i for i in range(n) if i not in S.i0_lambda], dtype=int)
    i0 = np.array(sorted(S.i0_lambda), dtype=int)
    if i0.size:
        Phi[i0, :] = 0.0
    colmax = np.abs(Phi).max(axis=0)
    Phi[np.abs(Phi) <= cfg.zero_tol * colmax[None, :]] = 0.0
    if np.any(Phi[support, 0] == 0):
        raise ConstructionError("first vector vanishes off the common zero set")
    Phi = _givens_repair(Phi, support)

    eps = np.array([_signing(Phi[:, s], S, builder.anchor, support) for s in range(r)])
    # back to the original matrix
    Phi_out = Phi * D[:, None]
    eps_out = eps * D[None, :]
    bounds, Ns, exacts, parts = [], [], [], []
    for s in range(r):
        dec = nodal_decomposition(G, M, eps_out[s].astype(float), LAPLACIAN,
                                  exact_cap=cfg.exact_cap, seed=cfg.seed)
        bounds.append(group.index_k + s + fr.f)
        Ns.append(dec.size)
        exacts.append(dec.certified_minimal)
        parts.append(dec.parts)
    return SignedBasisResult(
        eigenvalue=group.lam, k=group.index_k, r=r, f=fr.f, f_exact=fr.exact,
        vectors=Phi_out, signings=eps_out, bounds=bounds, N=Ns, N_exact=exacts,
        partitions=parts, coefficients=records,
        raw_vectors=[v * D for v in raw] if not S.exact else
        [np.array([x * int(d) for x, d in zip(v, D)], dtype=object) for v in raw],
        i0_lambda=S.i0_lambda, switching=D, structure=S,
    )


# ---------------------------------------------------------- validation


@dataclass(frozen=True)
class BasisVectorReport(BoundReport):
    """Bound report for one signed basis vector; ``upper`` is ``k + (s-1) + f``."""

    s: int = 1
    problems: tuple = ()

    def to_json(self):
        out = super().to_json()
        out.pop("s", None)
        out.pop("problems", None)
        return out


def validate_signed_basis(M, group: EigenGroup, result, f=None, signings=None, require_unit=True,
                          i0=None, partitions=None, orth_tol=1e-10, exact_cap=20,
                          zero_tol=DEFAULT_VECTOR_ZERO_TOL, time_budget=DEFAULT_TIME_BUDGET):
    """Check a signed basis; returns one :class:`BasisVectorReport` per vector.

    ``result`` is a :class:`SignedBasisResult`, or the vectors themselves
    (``n x m`` columns or a list) with ``signings`` given separately. The check covers
    sign compatibility, orthogonality, eigen-residuals, and the bound
    ``N(eps_s) <= k + (s-1) + f``. Optional ``partitions`` (one list of
    vertex sets per vector) are checked for validity and against the bound.
    Orthogonality is measured on normalized vectors against ``orth_tol``.
    ``satisfied`` is true only when no problem was found. ``lower`` reports ``k + (r-1) - nu`` for reference; no
    guarantee is made for it.
    """
    M = as_symmetric_matrix(M)
    G = from_symmetric_matrix(M)
    n = M.shape[0]
    if isinstance(result, SignedBasisResult):
        vectors, signings = result.vectors, result.signings
        f = result.f if f is None else f
        i0 = result.i0_lambda if i0 is None else i0
    else:
        vectors = result
        if signings is None:
            raise ValueError("signings are required when passing raw vectors")
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2 and vectors.shape[0] == n:
        vecs = [np.asarray(vectors[:, c], dtype=float) for c in range(vectors.shape[1])]
    else:
        vecs = [_float(v) for v in vectors]
    if f is None:
        f = frustration_index_exact(G).f
    nu = graph_invariants(G).nu
    k, r = group.index_k, group.multiplicity_r
    units = [v / np.linalg.norm(v) for v in vecs]
    reports = []
    for s, (v, e) in enumerate(zip(vecs, signings), start=1):
        e = np.asarray(e, dtype=int)
        problems = []
        tol = zero_tol * float(np.abs(v).max())
        nz = np.abs(v) > tol
        if np.any(np.sign(v[nz]) != e[nz]):
            bad = np.flatnonzero(nz & (np.sign(v) != e)).tolist()
            problems.append(f"signing disagrees with sgn(phi) at {bad}")
        if not np.all(np.isin(e, (-1, 1))):
            problems.append("signing has entries other than +-1")
        if require_unit and abs(np.linalg.norm(v) - 1) > 1e-9:
            problems.append("vector is not unit length")
        if i0 is not None:
            off = [j for j in range(n) if j not in i0 and not nz[j]]
            if off:
                problems.append(f"vector vanishes off the common zero set at {off}")
        u = units[s - 1]
        for t in range(s - 1):
            ip = abs(float(np.dot(u, units[t])))
            if ip > orth_tol:
                problems.append(f"not orthogonal to vector {t + 1} (|<u,v>| = {ip:.3g})")
        res = float(np.linalg.norm(M @ u - group.lam * u))
        if res > 1e-8:
            problems.append(f"eigen-residual {res:.2e}")
        dec = nodal_decomposition(G, M, e.astype(float), LAPLACIAN, exact_cap=exact_cap)
        N = dec.size
        upper = k + (s - 1) + int(f)
        if partitions is not None:
            listed = [frozenset(p) for p in partitions[s - 1]]
            for msg in validate_partition(G, M, e.astype(float), listed, LAPLACIAN):
                problems.append(f"listed partition: {msg}")
            if len(listed) > upper:
                problems.append(f"listed partition has {len(listed)} parts, bound {upper}")
        if N > upper and not dec.certified_minimal:
            # heuristic or timed-out count: retry exactly before judging
            try:
                dec = minimal_nodal_decomposition_exact(G, M, e.astype(float), LAPLACIAN,
                                                        exact_cap=n, time_budget=time_budget)
                N = min(N, dec.size)
            except NodalKitError:
                pass
        if N > upper:
            if not dec.certified_minimal:
                problems.append("heuristic count above bound; indeterminate")
            else:
                problems.append(f"N={N} exceeds bound {upper}")
        reports.append(BasisVectorReport(
            k=k, r=r, nu=nu, f=int(f), N=N, exactN=dec.certified_minimal,
            lower=k + (r - 1) - nu, upper=upper, satisfied=not problems, s=s,
            problems=tuple(problems),
        ))
    return reports


# ---------------------------------------------------------- perturbation


def perturbation_radius(Phi, i0, upsilon_scale=1.0):
    """``scale * 2^{-C(r,2)} * min |phi_s(j)|`` over vectors and vertices off ``i0``."""
    n, r = Phi.shape
    support = [j for j in range(n) if j not in i0]
    m = float(np.abs(Phi[support]).min()) if support else 0.0
    return upsilon_scale * 2.0 ** (-(r * (r - 1) // 2)) * m


def _rotate(Phi, pairs, angles):
    P = Phi.copy()
    for (a, b), th in zip(pairs, angles):
        c, s = math.cos(th), math.sin(th)
        x, y = P[:, a].copy(), P[:, b].copy()
        P[:, a] = c * x - s * y
        P[:, b] = s * x + c * y
    return P


def perturbation_stability_test(M, group: EigenGroup, result: SignedBasisResult,
                                upsilon_scale=1.0, trials=100, seed=0, workers=None) -> float:
    """Fraction of random small rotations of the basis keeping all signs and bounds.

    Each trial composes ``C(r,2)`` Givens rotations (one per index pair)
    with angles uniform in ``[-upsilon, upsilon]``. A trial passes when the
    sign pattern off the common zero set is unchanged and every signing still
    meets its bound. Trials run on ``workers`` threads (default from
    ``NODALKIT_THREADS``, else 1) with per-trial seeds.
    """
    M = as_symmetric_matrix(M)
    G = from_symmetric_matrix(M)
    Phi = np.asarray(result.vectors, dtype=float)
    n, r = Phi.shape
    i0 = result.i0_lambda
    support = np.array([j for j in range(n) if j not in i0], dtype=int)
    ups = perturbation_radius(Phi, i0, upsilon_scale)
    pairs = list(itertools.combinations(range(r), 2))
    S, D = result.structure, result.switching
    anchors = _anchors(S, M)
    base_signs = np.sign(Phi[support])

    def trial(ss):
        rng = np.random.default_rng(ss)
        angles = rng.uniform(-ups, ups, size=len(pairs))
        P = _rotate(Phi, pairs, angles)
        if not np.all(np.sign(P[support]) == base_signs):
            return False
        Psw = P * D[:, None]
        for s in range(r):
            e = _signing(Psw[:, s], S, anchors, support) * D
            if not np.array_equal(e, result.signings[s]):
                dec = nodal_decomposition(G, M, e.astype(float), LAPLACIAN)
                if dec.size > result.bounds[s]:
                    return False
        return True

    if trials <= 0:
        return 1.0
    children = np.random.SeedSequence([int(seed) & (2**64 - 1), 0xA7]).spawn(trials)
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            passed = sum(ex.map(trial, children))
    else:
        passed = sum(trial(c) for c in children)
    return passed / trials


def _anchors(S, M):
    """Smallest neighbour of each ``X_i`` inside ``Y_{u(i)}``."""
    out = []
    for i, Xi in enumerate(S.X_parts):
        Yu = set(S.Y_parts[S.u[i]])
        cand = sorted({b for a in Xi for b in np.flatnonzero(np.abs(M[a]) > 1e-12).tolist()
                       if b in Yu})
        out.append(cand[0])
    return out


def worker_count():
    try:
        return max(1, int(os.environ.get("NODALKIT_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------- strong support basis


def _positive_peak(y):
    i = int(np.argmax(np.abs(y)))
    return -y if y[i] < 0 else y


def construct_strong_support_basis(M, group: EigenGroup, seed=0, exact_cap=20, extra_zeroing=False,
                                   zero_tol=DEFAULT_VECTOR_ZERO_TOL):
    """Orthonormal eigenbasis with ``N^s(phi_l) <= k + (l-1) + f``.

    Built one vector at a time: take an eigenvector orthogonal to those
    already built, split its support into parts joined only through negative
    entries, and recombine the part indicators so that the result stays in
    the eigenspace while the leading parts are switched off. With
    ``extra_zeroing`` further leading coefficients are zeroed while the
    solution space allows it.
    """
    M = as_symmetric_matrix(M)
    n = M.shape[0]
    G, fr, D, Msw = _switched_problem(M, 24)
    f = fr.f
    k, r, lam = group.index_k, group.multiplicity_r, group.lam
    spec = eigendecompose(Msw)
    lower = spec.eigenvectors[:, : k - 1]
    E = la.orth_basis_float(np.asarray(group.basis, dtype=float) * D[:, None])
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0x57]))
    Gsw = from_symmetric_matrix(Msw)
    I, J, _ = Gsw.edge_arrays()
    posI, posJ = I[Msw[I, J] > 0], J[Msw[I, J] > 0]

    def good_fn(Ie, Je, prod):
        return (prod < 0) & (Msw[Ie, Je] < 0)

    built = []
    for ell in range(r):
        B = np.column_stack(built) if built else np.zeros((n, 0))
        x = E @ rng.standard_normal(E.shape[1])
        if built:
            x = x - B @ (B.T @ x)
            x = x - B @ (B.T @ x)
        x = x / np.linalg.norm(x)
        tol = zero_tol * float(np.abs(x).max())
        x[np.abs(x) <= tol] = 0.0
        support = np.flatnonzero(x != 0)
        dec = nodal_decomposition(Gsw, Msw, x, LAPLACIAN, vertices=support.tolist(),
                                  zero_tol=tol, exact_cap=exact_cap, seed=seed, good_fn=good_fn)
        parts = list(dec.parts)
        t = len(parts)
        target = k + ell + f
        if t <= target:
            built.append(_positive_peak(x / np.linalg.norm(x)))
            continue
        where = -np.ones(n, dtype=int)
        for pidx, part in enumerate(parts):
            where[list(part)] = pidx
        X = np.zeros((n, t))
        for pidx, part in enumerate(parts):
            idx = list(part)
            X[idx, pidx] = x[idx]
        rows = []
        for a, b in zip(posI, posJ):
            pa, pb = where[a], where[b]
            if pa >= 0 and pb >= 0 and pa != pb:
                row = np.zeros(t)
                row[pa], row[pb] = 1.0, -1.0
                rows.append(row)
        ortho = np.column_stack([lower, B]) if (lower.shape[1] or B.shape[1]) else np.zeros((n, 0))
        for c in range(ortho.shape[1]):
            rows.append(ortho[:, c] @ X)
        nzero = t - f - k - ell
        for c in range(nzero):
            row = np.zeros(t)
            row[c] = 1.0
            rows.append(row)
        Nb = la.null_basis_float(np.array(rows).reshape(-1, t), t, tol=1e-9)
        if Nb.shape[1] == 0:
            raise ConstructionError(
                f"solution space is empty for vector {ell + 1} (t={t}, f={f}, k={k})"
            )
        if extra_zeroing:
            c = nzero
            while Nb.shape[1] > 1 and c < t:
                row = np.zeros(t)
                row[c] = 1.0
                rows.append(row)
                Nb2 = la.null_basis_float(np.array(rows), t, tol=1e-9)
                if Nb2.shape[1] == 0:
                    rows.pop()
                    break
                Nb = Nb2
                c += 1
        a = Nb[:, 0]
        y = X @ a
        y = y / np.linalg.norm(y)
        if np.linalg.norm(Msw @ y - lam * y) > 1e-7:
            raise ConstructionError("recombined vector left the eigenspace (tolerance failure)")
        if built:
            y = y - B @ (B.T @ y)
            y = y / np.linalg.norm(y)
        ytol = zero_tol * float(np.abs(y).max())
        y[np.abs(y) <= ytol] = 0.0
        built.append(_positive_peak(y / np.linalg.norm(y)))
    out = np.column_stack(built) * D[:, None]
    return out


def strong_support_counts(M, vectors, exact_cap=20, zero_tol=DEFAULT_VECTOR_ZERO_TOL):
    """``N^s`` of each column of ``vectors`` (Laplacian convention)."""
    M = as_symmetric_matrix(M)
    G = from_symmetric_matrix(M)
    out = []
    for c in range(vectors.shape[1]):
        v = vectors[:, c]
        tol = zero_tol * float(np.abs(v).max())
        out.append(support_nodal_count(G, M, v, LAPLACIAN, zero_tol=tol, exact_cap=exact_cap).size)
    return out
