import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_clique_domain, is_nodal_part
from nodalkit import fixtures as fx
from nodalkit.graph_core import from_symmetric_matrix
from nodalkit.nodal import path_domain_counts
from nodalkit.random_experiments import (
    CliqueDomainConfig,
    ExperimentConfig,
    GnpqParams,
    clique_domain_present,
    derive_seed,
    find_clique_domain,
    greedy_clique_partition,
    max_domain_bound,
    max_domain_size_bound_check,
    pair_uniforms,
    path_triviality_scan,
    run_experiment,
    run_seed,
    sample_gnpq,
)
from nodalkit.spectral import eigendecompose


def test_params_validation():
    for bad in ((0, 0.3, 0.3), (5, 0.0, 0.3), (5, 0.6, 0.6)):
        with pytest.raises(ValueError):
            GnpqParams(*bad)
    assert GnpqParams(5, 0.2, 0.5).pq_min == 0.2


def test_sampling_deterministic_and_order_free():
    a = sample_gnpq(GnpqParams(60, 0.3, 0.2, seed=11))[1]
    b = sample_gnpq(GnpqParams(60, 0.3, 0.2, seed=11))[1]
    c = sample_gnpq(GnpqParams(60, 0.3, 0.2, seed=12))[1]
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, a.T) and np.all(np.diag(a) == 0)
    # a pair's draw does not depend on which other pairs are drawn
    I, J = np.triu_indices(60, 1)
    u = pair_uniforms(11, I, J)
    assert np.array_equal(pair_uniforms(11, I[::-1], J[::-1]), u[::-1])
    # the smaller graph is the induced subgraph of the larger one
    small = sample_gnpq(GnpqParams(30, 0.3, 0.2, seed=11))[1]
    assert np.array_equal(small, a[:30, :30])


def test_complete_when_p_plus_q_is_one():
    G, _ = sample_gnpq(GnpqParams(25, 0.4, 0.6, seed=3))
    assert G.m == 25 * 24 // 2


def test_edge_count_concentration():
    n = 2000
    G, A = sample_gnpq(GnpqParams(n, 0.3, 0.3, seed=5))
    pairs = n * (n - 1) // 2
    sigma = math.sqrt(pairs * 0.6 * 0.4)
    assert abs(G.m - 0.6 * pairs) <= 4 * sigma
    pos = int(np.count_nonzero(np.triu(A, 1) > 0))
    assert abs(pos - 0.3 * pairs) <= 4 * math.sqrt(pairs * 0.3 * 0.7)


def test_derive_seed_stable():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


def test_clique_domain_examples():
    A = fx.complete_adjacency(5)
    assert clique_domain_present(A, np.ones(5), k=3)
    assert not clique_domain_present(np.zeros((5, 5)), np.ones(5), k=2)
    # a negative edge is good when the endpoints have opposite signs
    A = np.array([[0.0, -1.0], [-1.0, 0.0]])
    assert clique_domain_present(A, np.array([1.0, -1.0]))
    assert find_clique_domain(A, np.array([1.0, 1.0])) is None


def test_clique_oracle_on_dense_sample():
    _, A = sample_gnpq(GnpqParams(40, 0.5, 0.5, seed=21))
    phi = eigendecompose(A).eigenvectors[:, 7]
    rng = np.random.default_rng(0)
    for _ in range(1000):
        S = np.sort(rng.choice(40, size=8, replace=False))
        A_S, phi_S = A[np.ix_(S, S)], phi[S]
        assert clique_domain_present(A_S, phi_S, k=3) == brute_clique_domain(A_S, phi_S, 3)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_clique_oracle_property(s, k, seed):
    rng = np.random.default_rng(seed)
    U = np.triu(rng.random((s, s)), 1)
    A = np.where(U > 0.6, 1.0, np.where(U > 0.3, -1.0, 0.0))
    A = np.triu(A, 1)
    A = A + A.T
    phi = rng.choice([-1.0, 1.0], size=s) * rng.uniform(0.1, 1, size=s)
    got = find_clique_domain(A, phi, k)
    assert (got is not None) == brute_clique_domain(A, phi, k)
    if got is not None:
        assert len(got) == k
        assert all(A[u, v] * phi[u] * phi[v] > 0 for u in got for v in got if u < v)


def test_resolve_defaults():
    s, budget, capped = CliqueDomainConfig().resolve(400, 0.3)
    assert (s, budget, capped) == (12, 6666, False)
    s, _, capped = CliqueDomainConfig(k=3).resolve(400, 0.3)
    assert s == 30 and capped
    with pytest.raises(ValueError):
        CliqueDomainConfig(k=1)
    with pytest.raises(ValueError):
        CliqueDomainConfig(k=3, s=2)


def test_budget_zero_removes_nothing():
    G, A = sample_gnpq(GnpqParams(50, 0.3, 0.3, seed=1))
    phi = eigendecompose(A).eigenvectors[:, 3]
    cp = greedy_clique_partition(G, A, phi, CliqueDomainConfig(budget=0), pq_min=0.3)
    assert cp.removed == 0 and cp.leftover == 50 and cp.domains == []


@settings(max_examples=15, deadline=None)
@given(st.integers(20, 80), st.sampled_from([2, 3]), st.integers(0, 1000))
def test_greedy_partition_accounting(n, k, seed):
    G, A = sample_gnpq(GnpqParams(n, 0.3, 0.3, seed=seed))
    phi = eigendecompose(A).eigenvectors[:, seed % n]
    cp = greedy_clique_partition(G, A, phi, CliqueDomainConfig(k=k), seed=seed, pq_min=0.3)
    assert cp.removed * k + cp.leftover == n
    used = [v for d in cp.domains for v in d]
    assert len(used) == len(set(used))
    for d in cp.domains:
        assert len(d) == k
        assert is_nodal_part(A, phi, d, conv="adjacency")
        assert all(A[u, v] != 0 for u in d for v in d if u < v)
    again = greedy_clique_partition(G, A, phi, CliqueDomainConfig(k=k), seed=seed, pq_min=0.3)
    assert again.domains == cp.domains


def test_bound_formula():
    assert max_domain_bound(400, 0.3) == 51


def test_planted_clique_found():
    n, k = 30, 6
    _, A = sample_gnpq(GnpqParams(n, 0.1, 0.1, seed=8))
    A[:k, :k] = 1.0
    np.fill_diagonal(A, 0.0)
    phi = np.ones(n)
    phi[k:] = np.where(np.arange(n - k) % 2 == 0, -1.0, 1.0)
    G = from_symmetric_matrix(A)
    size, bound, _ = max_domain_size_bound_check(G, A, phi, pq_min=0.1)
    assert size >= k
    assert bound == max_domain_bound(n, 0.1)


def test_path_triviality_examples():
    A = fx.complete_adjacency(6)
    spec = eigendecompose(A)
    flags = path_triviality_scan(None, A, spec)
    assert flags[-1]  # constant-sign top eigenvector
    # path 0 - 1 - 2 with a negative edge: top vector leaves an isolated vertex in G^>
    P = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, -1.0], [0.0, -1.0, 0.0]])
    x = np.array([1.0, 1.0, 1.0])
    assert path_domain_counts(None, P, x, "adjacency").kappa_gt == 2
    assert not all(path_triviality_scan(None, P))


def test_run_seed_stats_consistency():
    cfg = ExperimentConfig(n=60, p=0.3, q=0.3, seeds=(4,), indices=(0, 10, 59))
    stats = run_seed(cfg, 4)
    assert [s.index for s in stats] == [0, 10, 59]
    for s in stats:
        assert s.removed * 2 + s.leftover == 60
        assert s.clique_count == s.removed + s.leftover <= 60
        assert s.path_trivial == (s.kappa_gt == 1)
        assert s.bound == max_domain_bound(60, 0.3)
        assert 1 <= s.N_heur <= 60


def test_experiment_reproducible_and_parallel():
    cfg = ExperimentConfig(n=40, p=0.3, q=0.3, seeds=(0, 1, 2))
    a = run_experiment(cfg)
    b = run_experiment(ExperimentConfig(n=40, p=0.3, q=0.3, seeds=(0, 1, 2), workers=3))
    assert [x.to_json() for x in a.stats] == [x.to_json() for x in b.stats]
    summ = a.summary()
    assert summ["eigenvectors"] == 120 and summ["seeds"] == 3
    assert set(summ["max_leftover_per_seed"]) == {"0", "1", "2"}
