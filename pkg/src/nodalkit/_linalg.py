"""Small dense linear-algebra helpers over Fractions and floats.

Matrices over ``Fraction`` are plain lists of lists; float matrices are numpy
arrays. Only what the eigenspace analysis needs is provided.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    xf = float(x)
    if xf.is_integer():
        return Fraction(int(xf))
    return Fraction(xf).limit_denominator(10**12)


def frac_matrix(A):
    return [[to_fraction(v) for v in row] for row in np.asarray(A, dtype=object).tolist()]


def rref_fraction(A):
    """Reduced row echelon form; returns ``(R, pivot_columns)`` with zero rows dropped."""
    R = [list(row) for row in A]
    rows = len(R)
    cols = len(R[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if piv is None:
            continue
        R[r], R[piv] = R[piv], R[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                fac = R[i][c]
                R[i] = [a - fac * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R[:r], pivots


def rref_float(A, tol=1e-10):
    """Float RREF with partial pivoting; entries below ``tol * max|A|`` count as zero."""
    R = np.array(A, dtype=float)
    if R.size == 0:
        return R.reshape(0, R.shape[1] if R.ndim == 2 else 0), []
    rows, cols = R.shape
    scale = max(1.0, float(np.abs(R).max()))
    thr = tol * scale
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        sub = np.abs(R[r:, c])
        i = int(np.argmax(sub))
        if sub[i] <= thr:
            R[r:, c] = 0.0
            continue
        piv = r + i
        R[[r, piv]] = R[[piv, r]]
        R[r] = R[r] / R[r, c]
        for k in range(rows):
            if k != r:
                R[k] = R[k] - R[k, c] * R[r]
        R[np.abs(R) <= thr] = 0.0
        pivots.append(c)
        r += 1
    return R[:r], pivots


def nullspace_fraction(A, ncols=None):
    """Basis of the right null space of a Fraction matrix, as a list of column vectors."""
    if not A:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    cols = len(A[0])
    R, pivots = rref_fraction(A)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * cols
        v[fc] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[fc]
        basis.append(v)
    return basis


def solve_fraction(A, b):
    """Solve a square Fraction system; returns ``None`` if singular."""
    n = len(A)
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, pivots = rref_fraction(aug)
    if pivots != list(range(n)):
        return None
    return [R[i][n] for i in range(n)]


def frac_dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def orth_basis_float(B, tol=1e-9):
    """Orthonormal basis of the column space of ``B`` via SVD."""
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return np.zeros((B.shape[0], 0))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((B.shape[0], 0))
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def null_basis_float(A, ncols, tol=1e-9):
    """Orthonormal basis (columns) of the null space of ``A``."""
    A = np.asarray(A, dtype=float).reshape(-1, ncols)
    if A.shape[0] == 0:
        return np.eye(ncols)
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    return Vt[rank:].T
