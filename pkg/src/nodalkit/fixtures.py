"""Small named matrices used in tests, demos and the CLI."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# 1-based description of the 16-vertex worked example
_SIXTEEN_DIAG = (1, 2, 5, 10, 11, 12)
_SIXTEEN_POS = ((6, 9), (15, 16))
_SIXTEEN_NEG = (
    (1, 2), (1, 5), (2, 5), (3, 8), (4, 8), (5, 6), (5, 9), (6, 7), (6, 11),
    (8, 11), (9, 10), (9, 13), (9, 14), (10, 11), (10, 12), (10, 15),
    (10, 16), (11, 12), (11, 15), (11, 16), (12, 15), (12, 16),
)


def sixteen_vertex_example() -> np.ndarray:
    """16x16 integer matrix whose zero eigenvalue has index 7 and multiplicity 6."""
    M = np.zeros((16, 16))
    for i in _SIXTEEN_DIAG:
        M[i - 1, i - 1] = -1
    for i, j in _SIXTEEN_POS:
        M[i - 1, j - 1] = M[j - 1, i - 1] = 1
    for i, j in _SIXTEEN_NEG:
        M[i - 1, j - 1] = M[j - 1, i - 1] = -1
    return M


def sixteen_vertex_psi():
    """Hand-picked non-vanishing (orthogonal, unnormalized) bases for the
    zero eigenspace of :func:`sixteen_vertex_example`, keyed by the sorted
    0-based vertex tuple of each component they live on."""
    two = [[Fraction(1), Fraction(2), Fraction(-3)], [Fraction(-5), Fraction(4), Fraction(1)]]
    one = [[Fraction(1)]]
    return {
        (0, 1, 4): two,
        (6,): one,
        (12,): one,
        (13,): one,
        (9, 10, 11): two,
        (2,): one,
        (3,): one,
    }


def sixteen_vertex_reference_vectors():
    """The three hand-built eigenvectors, signings and nodal partitions, as originally listed.

    The listed third vector uses ``alpha_1^3 = 55/3, alpha_1^4 = -98/9``,
    which do not solve its own orthogonality equations; see
    :func:`sixteen_vertex_corrected_third_vector`.
    """
    F = Fraction
    phis = [
        [-5, 4, 1, 1, 1, 0, 1, 0, 0, -3, -2, 5, 1, 1, 0, 0],
        [-5, 4, 1, 1, 1, 0, 1, 0, 0, F(58, 9), -2, F(-40, 9), 1, F(-76, 9), 0, 0],
        [-5, 4, 1, 1, 1, 0, 1, 0, 0, F(-76, 9), -2, F(94, 9), F(55, 3), F(-98, 9), 0, 0],
    ]
    p, m = 1, -1
    eps = [
        [m, p, p, p, p, p, p, m, p, m, m, p, p, p, m, m],
        [m, p, p, p, p, p, p, m, p, p, m, m, p, m, p, p],
        [m, p, p, p, p, p, p, m, p, m, m, p, p, m, m, m],
    ]
    parts_1based = [
        [[1], [2, 5, 6, 7], [3], [4], [8, 10, 11, 15], [9, 13, 14], [12], [16]],
        [[1], [2, 5, 6, 7], [3], [4], [8, 11, 12], [9, 10, 13, 15], [14], [16]],
        [[1], [2, 5, 6, 7], [3], [4], [8, 10, 11, 15], [9, 13], [12], [14], [16]],
    ]
    parts = [[frozenset(v - 1 for v in part) for part in ps] for ps in parts_1based]
    return (
        [[F(x) for x in phi] for phi in phis],
        [np.array(e, dtype=int) for e in eps],
        parts,
    )


def sixteen_vertex_corrected_third_vector():
    """Third vector with ``alpha_1^3 = -55/3, alpha_1^4 = 98/9`` and its signing."""
    F = Fraction
    phi = [-5, 4, 1, 1, 1, 0, 1, 0, 0, F(58, 9), -2, F(-40, 9), F(-55, 3), F(98, 9), 0, 0]
    eps = [-1, 1, 1, 1, 1, 1, 1, -1, 1, 1, -1, -1, -1, 1, 1, 1]
    return [F(x) for x in phi], np.array(eps, dtype=int)


def laplacian_from_adjacency(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.diag(A.sum(axis=1)) - A


def star_laplacian(n: int) -> np.ndarray:
    """Laplacian of the star with hub 0 and ``n - 1`` leaves."""
    A = np.zeros((n, n))
    A[0, 1:] = A[1:, 0] = 1
    return laplacian_from_adjacency(A)


def path_adjacency(n: int) -> np.ndarray:
    A = np.zeros((n, n))
    idx = np.arange(n - 1)
    A[idx, idx + 1] = A[idx + 1, idx] = 1
    return A


def path_neg_adjacency(n: int) -> np.ndarray:
    """Negative adjacency matrix of the path (eigenvalues ``-2 cos(k pi/(n+1))``)."""
    return -path_adjacency(n)


def cycle_adjacency(n: int) -> np.ndarray:
    return circulant_adjacency(n, [1])


def circulant_adjacency(n: int, offsets) -> np.ndarray:
    A = np.zeros((n, n))
    for d in offsets:
        for i in range(n):
            j = (i + d) % n
            if j != i:
                A[i, j] = A[j, i] = 1
    return A


def complete_bipartite_adjacency(a: int, b: int) -> np.ndarray:
    n = a + b
    A = np.zeros((n, n))
    A[:a, a:] = 1
    A[a:, :a] = 1
    return A


def complete_adjacency(n: int) -> np.ndarray:
    return np.ones((n, n)) - np.eye(n)


def petersen_adjacency() -> np.ndarray:
    A = np.zeros((10, 10))
    for i in range(5):
        for a, b in ((i, (i + 1) % 5), (i, i + 5), (i + 5, (i + 2) % 5 + 5)):
            A[a, b] = A[b, a] = 1
    return A


def unbalanced_triangle() -> np.ndarray:
    """Negative adjacency of a triangle with one entry flipped to +1."""
    M = -complete_adjacency(3)
    M[0, 1] = M[1, 0] = 1
    return M
