import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import random_integer_symmetric
from nodalkit import fixtures as fx
from nodalkit.spectral import (
    eigendecompose,
    eigenspace_common_zeros,
    group_containing,
    group_eigenvalues,
    jacobi_eigh,
    vanishing_set,
)


def test_star_spectrum_and_groups():
    spec = eigendecompose(fx.star_laplacian(5))
    assert np.allclose(spec.eigenvalues, [0, 1, 1, 1, 5])
    groups = group_eigenvalues(spec, 1e-8)
    assert [(round(g.lam, 8), g.k, g.r) for g in groups] == [(0, 1, 1), (1, 2, 3), (5, 5, 1)]


@pytest.mark.parametrize("n", [2, 5, 9])
def test_path_closed_form(n):
    spec = eigendecompose(fx.path_neg_adjacency(n))
    expect = np.sort(-2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))
    assert np.allclose(spec.eigenvalues, expect, atol=1e-12)
    amp = np.sqrt(2 / (n + 1)) * np.abs(np.sin(np.outer(np.arange(1, n + 1), np.arange(1, n + 1))
                                                * np.pi / (n + 1)))
    assert np.allclose(np.abs(spec.eigenvectors), amp, atol=1e-10)


def test_identity_one_group():
    groups = group_eigenvalues(eigendecompose(np.eye(4)))
    assert len(groups) == 1 and groups[0].r == 4 and groups[0].k == 1


def test_sixteen_vertex_group():
    M = fx.sixteen_vertex_example()
    g = group_containing(group_eigenvalues(eigendecompose(M)), 0.0)
    assert (g.k, g.r) == (7, 6)
    assert {v + 1 for v in eigenspace_common_zeros(g)} == {6, 8, 9, 15, 16}


def test_vanishing_sets():
    phi1 = np.array([-5, 4, 1, 1, 1, 0, 1, 0, 0, -3, -2, 5, 1, 1, 0, 0], dtype=float)
    assert {v + 1 for v in vanishing_set(phi1)} == {6, 8, 9, 15, 16}
    assert vanishing_set(np.ones(3)) == frozenset()
    assert vanishing_set(np.zeros(3)) == frozenset({0, 1, 2})


def test_common_zeros_examples():
    g = group_containing(group_eigenvalues(eigendecompose(fx.star_laplacian(6))), 1.0)
    assert eigenspace_common_zeros(g) == frozenset({0})
    g = group_eigenvalues(eigendecompose(fx.path_neg_adjacency(4)))[0]
    assert eigenspace_common_zeros(g) == frozenset()


def test_bad_group_tol():
    with pytest.raises(ValueError):
        group_eigenvalues(eigendecompose(np.eye(2)), 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_spectrum_invariants(n, seed):
    M = random_integer_symmetric(np.random.default_rng(seed), n)
    spec = eigendecompose(M)
    w, V = spec.eigenvalues, spec.eigenvectors
    assert np.all(np.diff(w) >= 0)
    assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-10
    assert spec.residual_norm <= 1e-9 * (1 + np.abs(M).max() * n)
    groups = group_eigenvalues(spec)
    assert sum(g.r for g in groups) == n
    for a, b in zip(groups, groups[1:]):
        assert b.k == a.k + a.r


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_jacobi_matches_lapack(n, seed):
    M = random_integer_symmetric(np.random.default_rng(seed), n)
    a = eigendecompose(M, "lapack")
    b = eigendecompose(M, "jacobi")
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)
    w, V = jacobi_eigh(M)
    assert np.abs(M @ V - V * w).max() < 1e-8
