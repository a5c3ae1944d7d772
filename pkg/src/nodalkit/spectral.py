"""Dense symmetric eigendecomposition, eigenvalue grouping and vanishing sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import as_symmetric_matrix

DEFAULT_GROUP_TOL = 1e-8
DEFAULT_VECTOR_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norm: float


@dataclass(frozen=True)
class EigenGroup:
    """Eigenvalues merged into one cluster.

    ``index_k`` is one plus the number of eigenvalues strictly below the
    cluster; ``basis`` is an ``n x r`` orthonormal block spanning it.
    """

    lam: float
    index_k: int
    multiplicity_r: int
    basis: np.ndarray

    @property
    def k(self):
        return self.index_k

    @property
    def r(self):
        return self.multiplicity_r


def _fix_signs(V):
    """Make the largest-magnitude entry of each column positive (first on ties)."""
    V = V.copy()
    for c in range(V.shape[1]):
        col = V[:, c]
        a = np.abs(col)
        top = a.max()
        if top == 0:
            continue
        i = int(np.flatnonzero(a >= top * (1 - 1e-9))[0])
        if col[i] < 0:
            V[:, c] = -col
    return V


def jacobi_eigh(M, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigenvalue iteration.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    is at most ``tol * ||M||_F``. Returns unsorted ``(w, V)``.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(A)
    if fro == 0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    return np.diag(A).copy(), V


def eigendecompose(M, method: str = "lapack") -> Spectrum:
    """Full spectrum sorted ascending with a deterministic sign convention.

    ``method`` is ``"lapack"`` (numpy ``eigh``) or ``"jacobi"``.
    """
    A = as_symmetric_matrix(M)
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = jacobi_eigh(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = _fix_signs(V[:, order])
    res = float(np.linalg.norm(A @ V - V * w, axis=0).max())
    return Spectrum(eigenvalues=w, eigenvectors=V, residual_norm=res)


def default_group_tol(spec: Spectrum) -> float:
    rad = float(np.abs(spec.eigenvalues).max()) if spec.eigenvalues.size else 0.0
    return DEFAULT_GROUP_TOL * max(1.0, rad)


def group_eigenvalues(spec: Spectrum, group_tol: float | None = None):
    """Merge consecutive eigenvalues whose gap is at most ``group_tol``."""
    if group_tol is None:
        group_tol = default_group_tol(spec)
    if group_tol <= 0:
        raise ValueError("group_tol must be positive")
    w = spec.eigenvalues
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > group_tol:
            groups.append(
                EigenGroup(
                    lam=float(np.mean(w[start:i])),
                    index_k=start + 1,
                    multiplicity_r=i - start,
                    basis=spec.eigenvectors[:, start:i].copy(),
                )
            )
            start = i
    return groups


def group_containing(groups, lam):
    """Group whose eigenvalue is closest to ``lam``."""
    return min(groups, key=lambda g: abs(g.lam - lam))


def vector_zero_tol(x, rel=DEFAULT_VECTOR_ZERO_TOL):
    x = np.asarray(x, dtype=float)
    return rel * float(np.abs(x).max()) if x.size else 0.0


def vanishing_set(x, zero_tol: float | None = None):
    """Indices where ``|x(j)| <= zero_tol`` (default relative to ``|x|_inf``)."""
    x = np.asarray(x, dtype=float)
    if zero_tol is None:
        zero_tol = vector_zero_tol(x)
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    return frozenset(np.flatnonzero(np.abs(x) <= zero_tol).tolist())


def eigenspace_common_zeros(group: EigenGroup, zero_tol: float = DEFAULT_VECTOR_ZERO_TOL):
    """Vertices where every vector of the eigenspace vanishes.

    Row ``j`` of the orthonormal basis block is tested against
    ``zero_tol * sqrt(r)``.
    """
    B = np.asarray(group.basis, dtype=float)
    r = B.shape[1]
    norms = np.linalg.norm(B, axis=1)
    return frozenset(np.flatnonzero(norms <= zero_tol * np.sqrt(r)).tolist())
