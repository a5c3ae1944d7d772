"""Signed Erdos-Renyi graphs G(n, p, q) and nodal statistics of their eigenvectors.

Each unordered pair ``{i, j}`` is a positive edge with probability ``p``,
a negative edge with probability ``q`` and absent otherwise. The sampled
matrix ``A`` carries the edge signs and is analyzed in the adjacency
convention: an edge is good for ``phi`` when ``A_ij phi(i) phi(j) > 0``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph_core import from_symmetric_matrix
from .nodal import (
    ADJACENCY,
    good_bad_matrices,
    minimal_nodal_decomposition_heuristic,
    normalize_convention,
    path_domain_counts,
)
from .spectral import eigendecompose

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def pair_uniforms(seed, I, J):
    """Uniform [0, 1) draws keyed by ``(seed, i, j)``; independent of call order."""
    key = (np.asarray(I, dtype=np.uint64) << np.uint64(32)) | np.asarray(J, dtype=np.uint64)
    s = splitmix64(np.uint64(int(seed) & (2**64 - 1)))
    h = splitmix64(key ^ s)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def derive_seed(seed, *tags):
    """Stable sub-seed for ``(seed, tag, ...)``."""
    h = splitmix64(np.uint64(int(seed) & (2**64 - 1)))
    for t in tags:
        h = splitmix64(h ^ np.uint64(int(t) & (2**64 - 1)))
    return int(h)


@dataclass(frozen=True)
class GnpqParams:
    n: int
    p: float
    q: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be at least 1")
        if not (0 < self.p and 0 < self.q and self.p + self.q <= 1 + 1e-12):
            raise ValueError("need 0 < p, 0 < q and p + q <= 1")

    @property
    def pq_min(self):
        return min(self.p, self.q)


def sample_gnpq(params: GnpqParams):
    """Sample ``G(n, p, q)``; returns ``(SignedGraph, A)`` with ``A`` the signed adjacency."""
    n = int(params.n)
    I, J = np.triu_indices(n, 1)
    u = pair_uniforms(params.seed, I, J)
    sign = np.where(u < params.p, 1.0, np.where(u < params.p + params.q, -1.0, 0.0))
    A = np.zeros((n, n))
    A[I, J] = sign
    A[J, I] = sign
    return from_symmetric_matrix(A), A


@dataclass(frozen=True)
class CliqueDomainConfig:
    """Greedy clique-domain search settings.

    ``s`` defaults to ``ceil((p ^ q)^-k)`` capped at ``min(n // 4, 30)``;
    ``budget`` (consecutive failed scans before stopping) defaults to
    ``200 n / s``.
    """

    k: int = 2
    s: int | None = None
    budget: int | None = None
    zero_tol: float = 1e-9
    convention: str = ADJACENCY

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.s is not None and self.s < self.k:
            raise ValueError("s must be at least k")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be nonnegative")

    def resolve(self, n, pq_min):
        """``(s, budget, capped)`` for a graph on ``n`` vertices."""
        if self.s is not None:
            s, capped = self.s, False
        else:
            raw = math.ceil(pq_min ** (-self.k) - 1e-9)
            cap = min(n // 4, 30)
            s = max(self.k, min(raw, cap))
            capped = s < raw
        s = min(s, n) if n >= self.k else s
        budget = self.budget if self.budget is not None else int(200 * n / max(s, 1))
        return s, budget, capped


@dataclass
class CliquePartition:
    domains: list
    removed: int
    leftover: int
    s: int
    budget: int
    scans: int

    @property
    def count(self):
        return self.removed + self.leftover


@dataclass
class EigenvectorStats:
    seed: int
    index: int
    kappa_lt: int
    kappa_le: int
    kappa_gt: int
    kappa_ge: int
    N_heur: int
    clique_count: int
    removed: int
    leftover: int
    max_size: int
    bound: int
    bound_ok: bool
    path_trivial: bool
    extra: dict = field(default_factory=dict)

    def to_json(self):
        out = asdict(self)
        out.pop("extra")
        out.update(self.extra)
        return out


def _good_matrix(A, phi, conv, zero_tol):
    conv = normalize_convention(conv)
    phi = np.asarray(phi, dtype=float)
    prod = np.asarray(A, dtype=float) * np.outer(phi, phi)
    good = prod > 0 if conv == ADJACENCY else prod < 0
    live = np.abs(phi) > zero_tol
    good &= live[:, None] & live[None, :]
    np.fill_diagonal(good, False)
    return good


def _first_clique(good, k):
    """Lexicographically smallest k-clique (local indices) of a boolean graph, or None."""
    m = good.shape[0]

    def extend(clique, cands):
        if len(clique) == k:
            return clique
        need = k - len(clique)
        for pos, v in enumerate(cands):
            if len(cands) - pos < need:
                return None
            rest = [w for w in cands[pos + 1:] if good[v, w]]
            if len(rest) < need - 1:
                continue
            found = extend(clique + [v], rest)
            if found is not None:
                return found
        return None

    return extend([], list(range(m)))


def clique_domain_present(A_S, phi_S, k=2, conv=ADJACENCY, zero_tol=1e-9):
    """True iff some k-subset of the block is a clique whose edges are all good."""
    return find_clique_domain(A_S, phi_S, k, conv, zero_tol) is not None


def find_clique_domain(A_S, phi_S, k=2, conv=ADJACENCY, zero_tol=1e-9):
    """Smallest witnessing k-clique domain (local indices) or None."""
    good = _good_matrix(A_S, phi_S, conv, zero_tol)
    return _first_clique(good, k)


def _batch_has_clique(good, S, k):
    """Vectorized clique test for a batch of index sets ``S`` (B x s), k in {2, 3}."""
    sub = good[S[:, :, None], S[:, None, :]]
    if k == 2:
        return sub.any(axis=(1, 2))
    f = sub.astype(np.float32)
    tri = np.einsum("bij,bjk,bki->b", f, f, f)
    return tri > 0


def _any_clique(good, vertices, k):
    sub = good[np.ix_(vertices, vertices)]
    if k == 2:
        return bool(sub.any())
    if k == 3:
        f = sub.astype(float)
        return bool(np.trace(f @ f @ f) > 0)
    return _first_clique(sub, k) is not None


def greedy_clique_partition(G, M, phi, config: CliqueDomainConfig | None = None, seed=0,
                            pq_min=None) -> CliquePartition:
    """Greedy removal of k-clique nodal domains found by random s-set scans.

    Random s-subsets of the remaining vertices are scanned; the first one
    containing a clique domain gives up its smallest witnessing clique.
    The search stops after ``budget`` consecutive failed scans, or earlier
    once no clique domain is left among the remaining vertices (further
    scans could not succeed). Vertices where ``phi`` vanishes are never
    placed in a clique.
    """
    cfg = config or CliqueDomainConfig()
    A = np.asarray(M, dtype=float)
    n = A.shape[0]
    phi = np.asarray(phi, dtype=float)
    if pq_min is None:
        dens = (np.count_nonzero(A) / max(n * (n - 1), 1)) / 2
        pq_min = max(min(dens, 1.0), 1e-3)
    s, budget, _ = cfg.resolve(n, pq_min)
    tol = cfg.zero_tol * float(np.abs(phi).max()) if n else 0.0
    good = _good_matrix(A, phi, cfg.convention, tol)
    k = cfg.k
    alive = np.abs(phi) > tol
    remaining = np.flatnonzero(alive)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0xC1]))
    domains = []
    failures = 0
    scans = 0
    batch = 8
    while failures < budget and remaining.size >= k:
        m = remaining.size
        size = min(s, m)
        B = min(batch, budget - failures)
        keys = rng.random((B, m))
        if size < m:
            idx = np.argpartition(keys, size - 1, axis=1)[:, :size]
        else:
            idx = np.tile(np.arange(m), (B, 1))
        idx.sort(axis=1)
        S = remaining[idx]
        if k <= 3:
            hit = _batch_has_clique(good, S, k)
        else:
            hit = np.array([_first_clique(good[np.ix_(row, row)], k) is not None for row in S])
        where = np.flatnonzero(hit)
        if where.size == 0:
            failures += B
            scans += B
            batch = min(batch * 2, 4096)
            if not _any_clique(good, remaining, k):
                break
            continue
        b = int(where[0])
        failures = 0
        scans += b + 1
        row = S[b]
        local = _first_clique(good[np.ix_(row, row)], k)
        dom = tuple(int(row[i]) for i in local)
        domains.append(dom)
        alive[list(dom)] = False
        remaining = np.flatnonzero(alive)
        batch = 8
    removed = len(domains)
    leftover = n - removed * k
    return CliquePartition(domains, removed, leftover, s, budget, scans)


def max_domain_bound(n, pq_min):
    """``ceil(3 log n / log(1 / (1 - p ^ q)))``."""
    return math.ceil(3 * math.log(n) / math.log(1.0 / (1.0 - pq_min)) - 1e-12)


def _grow(part, Good, Bad, live):
    members = np.zeros(Good.shape[0], dtype=bool)
    members[list(part)] = True
    while True:
        touches = Good[:, members].any(axis=1)
        conflict = Bad[:, members].any(axis=1)
        cand = np.flatnonzero(touches & ~conflict & ~members & live)
        if cand.size == 0:
            return int(members.sum())
        members[cand[0]] = True


def max_domain_size_bound_check(G, M, phi, conv=ADJACENCY, pq_min=None, seed=0, decomposition=None,
                                grow_top=5):
    """Largest nodal part found heuristically, against ``ceil(3 log_{1/(1-p^q)} n)``.

    The heuristic decomposition's largest parts are grown greedily by
    vertices that have a good edge into the part and no bad edge to it.
    Returns ``(max_size, bound, ok)``.
    """
    A = np.asarray(M, dtype=float)
    n = A.shape[0]
    if G is None:
        G = from_symmetric_matrix(A)
    if pq_min is None:
        pos = np.count_nonzero(A > 0) / max(n * (n - 1), 1)
        neg = np.count_nonzero(A < 0) / max(n * (n - 1), 1)
        pq_min = max(min(pos, neg), 1e-6)
    phi = np.asarray(phi, dtype=float)
    if decomposition is None:
        decomposition = minimal_nodal_decomposition_heuristic(G, A, phi, conv, seed=seed)
    Good, Bad = good_bad_matrices(G, A, phi, normalize_convention(conv))
    live = np.zeros(n, dtype=bool)
    live[list(decomposition.vertices)] = True
    parts = sorted(decomposition.parts, key=len, reverse=True)[:grow_top]
    max_size = max((_grow(p, Good, Bad, live) for p in parts), default=0)
    bound = max_domain_bound(n, pq_min)
    return max_size, bound, max_size <= bound


def path_triviality_scan(G, M, spectrum=None, conv=ADJACENCY):
    """Per eigenvector, whether ``G^>`` (good edges in the adjacency convention) is connected."""
    A = np.asarray(M, dtype=float)
    if G is None:
        G = from_symmetric_matrix(A)
    if spectrum is None:
        spectrum = eigendecompose(A)
    out = []
    for i in range(spectrum.eigenvectors.shape[1]):
        pc = path_domain_counts(G, A, spectrum.eigenvectors[:, i], conv)
        out.append(pc.kappa_gt == 1)
    return out


@dataclass
class ExperimentConfig:
    n: int
    p: float
    q: float
    seeds: tuple = (0,)
    clique: CliqueDomainConfig = field(default_factory=CliqueDomainConfig)
    indices: tuple | None = None
    leftover_frac: float = 0.10
    workers: int | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    stats: list
    s: int
    budget: int
    s_capped: bool
    bound: int

    def per_seed(self):
        out = {}
        for st in self.stats:
            out.setdefault(st.seed, []).append(st)
        return out

    def summary(self):
        st = self.stats
        total = max(len(st), 1)
        n = self.config.n
        seeds = self.per_seed()
        lf = self.config.leftover_frac
        return {
            "n": n,
            "p": self.config.p,
            "q": self.config.q,
            "k": self.config.clique.k,
            "s": self.s,
            "s_capped": self.s_capped,
            "budget": self.budget,
            "bound": self.bound,
            "eigenvectors": len(st),
            "path_trivial_rate": sum(x.path_trivial for x in st) / total,
            "bound_ok_rate": sum(x.bound_ok for x in st) / total,
            "mean_clique_count_over_n": float(np.mean([x.clique_count / n for x in st])) if st else 0.0,
            "mean_N_heur_over_n": float(np.mean([x.N_heur / n for x in st])) if st else 0.0,
            "N_heur_over_n_log_n": float(np.mean([x.N_heur / (n / math.log(n)) for x in st]))
            if st and n > 1 else 0.0,
            "max_leftover_per_seed": {str(sd): max(x.leftover for x in v) for sd, v in seeds.items()},
            "seeds_leftover_ok": sum(
                1 for v in seeds.values() if all(x.leftover <= lf * n for x in v)
            ),
            "seeds": len(seeds),
        }


def _worker_count(workers):
    if workers:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("NODALKIT_THREADS", "1")))
    except ValueError:
        return 1


def run_seed(cfg: ExperimentConfig, seed: int):
    """All eigenvector statistics for one sampled graph."""
    params = GnpqParams(cfg.n, cfg.p, cfg.q, seed)
    G, A = sample_gnpq(params)
    spec = eigendecompose(A)
    n = cfg.n
    pq = params.pq_min
    bound = max_domain_bound(n, pq) if n > 1 else 1
    idx = range(n) if cfg.indices is None else cfg.indices
    out = []
    for i in idx:
        phi = spec.eigenvectors[:, i]
        pc = path_domain_counts(G, A, phi, ADJACENCY)
        sub = derive_seed(seed, 0x5EED, i)
        dec = minimal_nodal_decomposition_heuristic(G, A, phi, ADJACENCY, seed=sub)
        size, bnd, ok = max_domain_size_bound_check(G, A, phi, ADJACENCY, pq_min=pq,
                                                    decomposition=dec)
        cp = greedy_clique_partition(G, A, phi, cfg.clique, seed=sub, pq_min=pq)
        out.append(EigenvectorStats(
            seed=int(seed), index=int(i), kappa_lt=pc.kappa_lt, kappa_le=pc.kappa_le,
            kappa_gt=pc.kappa_gt, kappa_ge=pc.kappa_ge, N_heur=dec.size,
            clique_count=cp.count, removed=cp.removed, leftover=cp.leftover, max_size=size,
            bound=bnd, bound_ok=ok, path_trivial=pc.kappa_gt == 1,
        ))
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every seed (optionally in parallel) and merge results by ``(seed, index)``."""
    GnpqParams(cfg.n, cfg.p, cfg.q, 0)
    workers = _worker_count(cfg.workers)
    if workers > 1 and len(cfg.seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(lambda sd: run_seed(cfg, sd), cfg.seeds))
    else:
        chunks = [run_seed(cfg, sd) for sd in cfg.seeds]
    stats = sorted((s for c in chunks for s in c), key=lambda x: (x.seed, x.index))
    pq = min(cfg.p, cfg.q)
    s, budget, capped = cfg.clique.resolve(cfg.n, pq)
    bound = max_domain_bound(cfg.n, pq) if cfg.n > 1 else 1
    return ExperimentResult(cfg, stats, s, budget, capped, bound)
