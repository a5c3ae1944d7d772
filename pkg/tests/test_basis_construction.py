import functools
import json
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import forced_multiplicity_matrices, random_integer_symmetric, twin_blowup
from oracles import brute_frustration
from nodalkit import fixtures as fx
from nodalkit.basis_construction import (
    ConstructionConfig,
    analyze_eigenspace,
    construct_signed_basis,
    construct_strong_support_basis,
    perturbation_radius,
    perturbation_stability_test,
    strong_support_counts,
    switch_structure,
    validate_signed_basis,
)
from nodalkit.graph_core import frustration_index_exact, from_symmetric_matrix, switch_matrix
from nodalkit.nodal import minimal_nodal_decomposition_exact
from nodalkit.spectral import eigendecompose, group_containing, group_eigenvalues


def group_of(M, lam):
    return group_containing(group_eigenvalues(eigendecompose(M)), lam)


@functools.lru_cache(maxsize=1)
def sixteen():
    M = fx.sixteen_vertex_example()
    g = group_of(M, 0.0)
    S = analyze_eigenspace(M, g, psi=fx.sixteen_vertex_psi())
    return M, g, S, construct_signed_basis(M, g, structure=S)


@functools.lru_cache(maxsize=1)
def structure_instances():
    out = [(name, M, lam) for name, M, lam in forced_multiplicity_matrices()]
    rng = np.random.default_rng(515)
    for t in range(40):
        M, lam = twin_blowup(rng)
        out.append((f"twin_{t}", M, lam))
    return out


# ------------------------------------------------------------ golden example


def test_sixteen_raw_vectors_and_signings():
    _, _, _, res = sixteen()
    phis, eps, _ = fx.sixteen_vertex_reference_vectors()
    phi3, eps3 = fx.sixteen_vertex_corrected_third_vector()
    assert list(res.raw_vectors[0]) == phis[0]
    assert list(res.raw_vectors[1]) == phis[1]
    assert list(res.raw_vectors[2]) == phi3
    assert np.array_equal(res.signings[0], eps[0])
    assert np.array_equal(res.signings[1], eps[1])
    assert np.array_equal(res.signings[2], eps3)


def test_sixteen_listed_second_vector_orthogonality_exact():
    phis, _, _ = fx.sixteen_vertex_reference_vectors()
    assert sum((a * b for a, b in zip(phis[0], phis[1])), Fraction(0)) == 0


def test_sixteen_corrected_third_vector_validates():
    M, g, _, _ = sixteen()
    phis, eps, parts = fx.sixteen_vertex_reference_vectors()
    phi3, eps3 = fx.sixteen_vertex_corrected_third_vector()
    for t in range(2):
        assert sum((a * b for a, b in zip(phis[t], phi3)), Fraction(0)) == 0
    reps = validate_signed_basis(M, g, [phis[0], phis[1], phi3], signings=[eps[0], eps[1], eps3],
                                 require_unit=False, i0=frozenset({5, 7, 8, 14, 15}))
    assert all(r.satisfied for r in reps), [r.problems for r in reps]
    assert [r.N for r in reps] == [8, 8, 8]


def test_sixteen_coefficient_classes():
    _, _, _, res = sixteen()
    E = {(5, 1), (5, 2), (7, 1)}
    F = {(1, 1), (1, 2), (6, 1)}
    expected = [
        (E, {(2, 1), (3, 1), (4, 1)}, set(), F),
        (E, {(2, 1), (3, 1)}, {(4, 1)}, F),
        (E, {(2, 1)}, {(3, 1), (4, 1)}, F),
    ]
    for rec, classes in zip(res.coefficients, expected):
        got = tuple({key for key, (_, c) in rec.items() if c == cls} for cls in "ESOF")
        assert got == classes
        assert rec[(1, 1)][0] == 0 and rec[(1, 2)][0] == 1 and rec[(6, 1)][0] == 1
        assert rec[(2, 1)][0] == 1
    assert res.coefficients[1][(4, 1)][0] == Fraction(-76, 9)
    assert (res.coefficients[2][(3, 1)][0], res.coefficients[2][(4, 1)][0]) == \
        (Fraction(-55, 3), Fraction(98, 9))
    # singleton components have psi = 1, so the coefficient is the vector entry there
    _, _, S, _ = sixteen()
    for s, rec in enumerate(res.coefficients):
        for j, Yj in enumerate(S.Y_parts):
            if len(Yj) == 1:
                assert rec[(j + 1, 1)][0] == res.raw_vectors[s][Yj[0]]


def test_sixteen_bounds_and_stability():
    M, g, _, res = sixteen()
    f = brute_frustration(from_symmetric_matrix(M))
    assert res.f == f == 2
    assert res.bounds == [7 + s + f for s in range(6)]
    assert all(N <= b for N, b in zip(res.N, res.bounds))
    assert perturbation_stability_test(M, g, res, trials=1000, seed=3) == 1.0


def test_flipped_signing_reported():
    M, g, _, res = sixteen()
    eps = res.signings.copy()
    support = [j for j in range(16) if j not in res.i0_lambda]
    eps[0, support[0]] *= -1
    reps = validate_signed_basis(M, g, res.vectors, signings=eps, f=res.f)
    assert not reps[0].satisfied
    assert any("signing disagrees" in p for p in reps[0].problems)
    assert all(r.satisfied for r in reps[1:])


def test_json_fields():
    _, _, _, res = sixteen()
    data = json.loads(json.dumps(res.to_json()))
    assert set(data) == {"eigenvalue", "k", "r", "f", "vectors"}
    assert set(data["vectors"][0]) == {"phi", "eps", "partition", "bound", "N"}
    assert len(data["vectors"]) == 6


# ------------------------------------------------------------ structure


def h_distance_two(S, i1, i2):
    return any((i1, j) in S.H_edges and (i2, j) in S.H_edges for j in range(S.q))


def equations(M, S):
    """Rows sum_b M[a, b] psi(b) over all variables, one per common-zero vertex."""
    rows = []
    for Xi in S.X_parts:
        for a in Xi:
            row = []
            for j, s in S.variables:
                Yj = list(S.Y_parts[j])
                row.append(sum(M[a, b] * S.psi[j][s, t] for t, b in enumerate(Yj)))
            rows.append(row)
    return rows


def assemble(S, free_values):
    """Eigenvector from free-variable values via the pivot formulas."""
    alpha = dict(free_values)
    for row, pv in enumerate(S.pivots):
        formula = S.pivot_formula(row)
        alpha[pv] = sum(c * alpha[(j - 1, s - 1)] for (j, s), c in formula.items())
    return alpha


@pytest.mark.parametrize("idx", range(90))
def test_structure_invariants(idx):
    name, M, lam = structure_instances()[idx]
    g = group_of(M, lam)
    S = analyze_eigenspace(M, g)
    G = from_symmetric_matrix(M)
    # orderings
    for i1 in range(1, S.p):
        assert any(h_distance_two(S, i1, i2) for i2 in range(i1)), name
    assert list(S.v) == sorted(S.v)
    # H connected
    if S.p:
        seen, stack = {("x", 0)}, [("x", 0)]
        while stack:
            side, a = stack.pop()
            for i, j in S.H_edges:
                nxt = ("y", j) if side == "x" and i == a else ("x", i) if side == "y" and j == a \
                    else None
                if nxt and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        assert len(seen) == S.p + S.q
    assert S.gamma == S.r_hat - S.r
    # X components are the components of i0, Y components those of the rest
    assert sorted(v for P in S.X_parts for v in P) == sorted(S.i0_lambda)
    assert sorted(v for P in S.Y_parts + S.X_parts for v in P) == list(range(G.n))
    # consistency of the selected index sequence
    pivot_ys = {j for j, _ in S.pivots}
    J = [j for j in range(S.q) if j not in pivot_ys][: S.q - S.gamma]
    for jm in J[1:]:
        assert jm > S.u[S.v[jm]]
    assert S.k_hat + S.r_hat <= S.k + S.r
    # pivot formulas solve the equations
    rows = equations(M, S)
    free = [v for v in S.variables if v not in set(S.pivots)]
    rng = np.random.default_rng(idx)
    for _ in range(100 if not S.exact else 10):
        if S.exact:
            vals = {v: Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))) for v in free}
        else:
            vals = {v: float(rng.standard_normal()) for v in free}
        alpha = assemble(S, vals)
        for row in rows:
            res = sum(c * alpha[v] for c, v in zip(row, S.variables))
            assert abs(float(res)) <= 1e-9
    # reconstruction spans the eigenspace
    vecs = []
    for w in free:
        alpha = assemble(S, {v: (1 if v == w else 0) for v in free})
        x = np.zeros(G.n)
        for (j, s), a in alpha.items():
            x[list(S.Y_parts[j])] += float(a) * np.asarray(S.psi[j][s], dtype=float)
        vecs.append(x)
    V = np.column_stack(vecs)
    assert np.linalg.matrix_rank(V, tol=1e-9) == g.r
    assert np.max(scipy.linalg.subspace_angles(V, g.basis)) <= 1e-8


def test_sixteen_diagnostics():
    _, _, S, _ = sixteen()
    assert S.u == (0, 4, 4)
    assert S.v == (0, 0, 0, 0, 0, 2, 2)
    assert S.r_sizes == (2, 1, 1, 1, 2, 1, 1)
    assert S.k_hat + S.r_hat <= S.k + S.r


def test_simple_nonvanishing_structure():
    M = fx.path_neg_adjacency(4)
    g = group_eigenvalues(eigendecompose(M))[1]
    S = analyze_eigenspace(M, g)
    assert (S.p, S.q, S.gamma) == (0, 1, 0)


@pytest.mark.parametrize("n", [4, 6, 9])
def test_star_structure(n):
    M = fx.star_laplacian(n)
    S = analyze_eigenspace(M, group_of(M, 1.0))
    assert S.i0_lambda == frozenset({0})
    assert (S.p, S.q, S.gamma) == (1, n - 1, 1)
    assert all(len(Y) == 1 for Y in S.Y_parts)


def test_switch_structure_flips_bases():
    M, g, S, _ = sixteen()
    d = np.random.default_rng(4).choice([-1, 1], size=16)
    T = switch_structure(S, d)
    for Yj, P, Q in zip(S.Y_parts, S.psi, T.psi):
        for t, b in enumerate(Yj):
            assert all(Q[s, t] == P[s, t] * int(d[b]) for s in range(P.shape[0]))
    assert T.pivots == S.pivots and T.gamma == S.gamma


# ------------------------------------------------------------ construction


def test_simple_eigenvalue_reduces_to_generic():
    M = fx.path_neg_adjacency(4)
    for g in group_eigenvalues(eigendecompose(M)):
        res = construct_signed_basis(M, g)
        assert res.r == 1
        phi = res.vectors[:, 0]
        assert np.array_equal(res.signings[0], np.sign(phi).astype(int))
        assert res.N[0] == g.k <= res.bounds[0]


@pytest.mark.parametrize("n", [4, 5, 7, 9])
def test_star_first_vector_pattern(n):
    M = fx.star_laplacian(n)
    g = group_of(M, 1.0)
    res = construct_signed_basis(M, g)
    assert res.r == n - 2
    leaves = res.vectors[1:, 0]
    pos, neg = int(np.sum(leaves > 0)), int(np.sum(leaves < 0))
    assert pos + neg == n - 1
    assert pos == 1 or neg == 1
    assert all(N <= 2 + s for s, N in enumerate(res.N))
    if n == 5:
        assert res.bounds == [2, 3, 4]


def test_zero_radius_is_identity():
    M, g, _, res = sixteen()
    assert perturbation_stability_test(M, g, res, upsilon_scale=0.0, trials=20) == 1.0


def test_radius_formula():
    Phi = np.array([[0.5, 0.1], [0.2, -0.3], [0.0, 0.0]])
    assert perturbation_radius(Phi, frozenset({2})) == pytest.approx(0.5 * 0.1)


def test_threaded_trials_agree():
    M = fx.star_laplacian(6)
    g = group_of(M, 1.0)
    res = construct_signed_basis(M, g)
    a = perturbation_stability_test(M, g, res, trials=40, seed=2, workers=1)
    b = perturbation_stability_test(M, g, res, trials=40, seed=2, workers=3)
    assert a == b == 1.0


@pytest.mark.parametrize("exact", [None, False])
def test_degenerate_instances(exact):
    rng = np.random.default_rng(2718)
    problems = []
    for t in range(200):
        M, lam = twin_blowup(rng)
        g = group_of(M, lam)
        res = construct_signed_basis(M, g, config=ConstructionConfig(seed=t, exact=exact))
        reps = validate_signed_basis(M, g, res)
        if not all(r.satisfied for r in reps):
            problems.append((t, [r.problems for r in reps]))
        assert res.vectors.shape == (M.shape[0], g.r)
    assert not problems, problems[:3]


def balanced_instances():
    out = []
    for name, M, lam in forced_multiplicity_matrices():
        if frustration_index_exact(from_symmetric_matrix(M)).f == 0 and M.shape[0] <= 12:
            out.append((name, M, lam))
    return out


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(balanced_instances()), st.integers(0, 2**32 - 1))
def test_switching_equivariance(inst, seed):
    # the optimal switching is unique up to sign when f == 0 on a connected graph
    _, M, lam = inst
    d = np.random.default_rng(seed).choice([-1, 1], size=M.shape[0])
    M2 = switch_matrix(M, d)
    a = construct_signed_basis(M, group_of(M, lam))
    b = construct_signed_basis(M2, group_of(M2, lam))
    back = b.vectors * d[:, None]
    for c in range(a.r):
        x, y = a.vectors[:, c], back[:, c]
        assert min(np.abs(x - y).max(), np.abs(x + y).max()) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 9), st.integers(0, 2**32 - 1))
def test_random_matrices_end_to_end(n, seed):
    rng = np.random.default_rng(seed)
    M = random_integer_symmetric(rng, n, density=0.5)
    for g in group_eigenvalues(eigendecompose(M)):
        res = construct_signed_basis(M, g)
        reps = validate_signed_basis(M, g, res)
        assert all(r.satisfied for r in reps), [r.problems for r in reps]
        assert max(N - b for N, b in zip(res.N, res.bounds)) <= 0


# ------------------------------------------------------------ strong basis


def test_strong_basis_simple_eigenvector_unchanged():
    M = fx.path_neg_adjacency(6)
    g = group_eigenvalues(eigendecompose(M))[2]
    V = construct_strong_support_basis(M, g)
    phi = g.basis[:, 0]
    assert min(np.abs(V[:, 0] - phi).max(), np.abs(V[:, 0] + phi).max()) <= 1e-10
    assert strong_support_counts(M, V) == [3]


def test_strong_basis_star_three_leaves():
    M = fx.star_laplacian(3)
    V = construct_strong_support_basis(M, group_of(M, 1.0))
    assert int(np.count_nonzero(np.abs(V[:, 0]) > 1e-9)) == 2


@pytest.mark.parametrize("extra", [False, True])
def test_strong_basis_twins(extra):
    rng = np.random.default_rng(99)
    for _ in range(40):
        M, lam = twin_blowup(rng)
        g = group_of(M, lam)
        f = frustration_index_exact(from_symmetric_matrix(M)).f
        V = construct_strong_support_basis(M, g, extra_zeroing=extra)
        assert np.abs(V.T @ V - np.eye(g.r)).max() <= 1e-9
        assert np.abs(M @ V - g.lam * V).max() <= 1e-8
        for ell, Ns in enumerate(strong_support_counts(M, V)):
            assert Ns <= g.k + ell + f


def test_strong_counts_use_support():
    M = fx.star_laplacian(5)
    x = np.array([0.0, 1.0, -1.0, 0.0, 0.0]) / np.sqrt(2)
    assert strong_support_counts(M, x[:, None]) == [2]
    G = from_symmetric_matrix(M)
    assert minimal_nodal_decomposition_exact(G, M, x, vertices=[1, 2]).size == 2
