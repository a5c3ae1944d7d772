"""The generic bounds k + (r-1) - nu <= N(phi) <= k + f on a few small matrices.

Shows how cycles (nu) loosen the lower bound and frustrated edges (f)
loosen the upper bound, and that trees are tight at N = k.
"""

import numpy as np

from nodalkit import fixtures as fx
from nodalkit.graph_core import frustration_index_exact, from_symmetric_matrix, graph_invariants
from nodalkit.nodal import minimal_nodal_decomposition_exact, path_domain_counts
from nodalkit.spectral import eigendecompose, group_eigenvalues


def tour(name, M):
    G = from_symmetric_matrix(M)
    nu = graph_invariants(G).nu
    f = frustration_index_exact(G).f
    print(f"\n{name}: n = {G.n}, nu = {nu}, f = {f}")
    print("   k  r   lower   N   upper   kappa(G^<)")
    for g in group_eigenvalues(eigendecompose(M)):
        for c in range(g.r):
            phi = g.basis[:, c]
            if np.abs(phi).min() <= 1e-9:
                print(f"  {g.k:2d} {g.r:2d}   (vanishes somewhere; N undefined)")
                continue
            N = minimal_nodal_decomposition_exact(G, M, phi).size
            kl = path_domain_counts(G, M, phi).kappa_lt
            print(f"  {g.k:2d} {g.r:2d}   {g.k + g.r - 1 - nu:5d}  {N:2d}   {g.k + f:5d}   {kl:5d}")


def main():
    tour("path on 6 vertices", fx.path_neg_adjacency(6))
    tour("cycle on 5 vertices", -fx.cycle_adjacency(5))
    tour("unbalanced triangle", fx.unbalanced_triangle())
    rng = np.random.default_rng(1)
    A = np.triu(rng.choice([-1.0, 0.0, 1.0], size=(8, 8)), 1)
    A = A + A.T + np.diag(np.arange(8.0))
    A[np.arange(7), np.arange(1, 8)] = A[np.arange(1, 8), np.arange(7)] = -1.0
    tour("random signed matrix", A)


if __name__ == "__main__":
    main()
