"""Two eigenbases of the star Laplacian at eigenvalue 1.

The signed basis uses full-support vectors whose first member has a single
leaf of one sign. The strong-support basis drives leaf entries to zero,
giving supports of sizes 2, 3, ..., n-1.
"""

import numpy as np

from nodalkit import fixtures as fx
from nodalkit.basis_construction import (
    construct_signed_basis,
    construct_strong_support_basis,
    strong_support_counts,
)
from nodalkit.spectral import eigendecompose, group_containing, group_eigenvalues


def main(n=7):
    M = fx.star_laplacian(n)
    g = group_containing(group_eigenvalues(eigendecompose(M)), 1.0)
    print(f"star on {n} vertices, eigenvalue 1: k = {g.k}, r = {g.r}")

    res = construct_signed_basis(M, g)
    print("\nsigned basis (hub first):")
    for s in range(res.r):
        signs = "".join("+" if e > 0 else "-" for e in res.signings[s])
        print(f"  eps_{s + 1} = {signs}   N = {res.N[s]}   bound = {res.bounds[s]}")

    V = construct_strong_support_basis(M, g)
    counts = strong_support_counts(M, V)
    print("\nstrong-support basis:")
    for ell in range(V.shape[1]):
        col = V[:, ell]
        support = int(np.count_nonzero(np.abs(col) > 1e-9))
        print(f"  phi_{ell + 1}: support {support}, N^s = {counts[ell]}, "
              f"bound = {g.k + ell}")
    print("\northonormal:", bool(np.allclose(V.T @ V, np.eye(g.r))))


if __name__ == "__main__":
    main()
