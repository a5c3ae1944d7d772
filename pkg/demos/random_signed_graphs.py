"""Nodal statistics of eigenvectors of random signed graphs G(n, p, q).

For every eigenvector of the signed adjacency matrix this reports whether
the good-edge graph G^> is connected, the size of the largest nodal part
found, and how much of the vertex set a greedy removal of good edges
(2-clique nodal domains) covers.
"""

import argparse

from nodalkit.random_experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=150)
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--q", type=float, default=0.3)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    cfg = ExperimentConfig(n=args.n, p=args.p, q=args.q, seeds=tuple(range(args.seeds)))
    res = run_experiment(cfg)
    s = res.summary()
    print(f"G({s['n']}, {s['p']}, {s['q']}), {s['seeds']} seeds, {s['eigenvectors']} eigenvectors")
    print(f"scan size s = {s['s']}, failure budget = {s['budget']}")
    print(f"G^> connected:            {100 * s['path_trivial_rate']:.1f}% of eigenvectors")
    print(f"largest part <= {s['bound']}:       {100 * s['bound_ok_rate']:.1f}%")
    print(f"mean N_heur / n:          {s['mean_N_heur_over_n']:.3f}")
    print(f"mean N_heur / (n/log n):  {s['N_heur_over_n_log_n']:.3f}")
    print("worst leftover per seed: ", s["max_leftover_per_seed"])
    sizes = {sd: max(x.max_size for x in v) for sd, v in res.per_seed().items()}
    print("largest part per seed:   ", sizes)


if __name__ == "__main__":
    main()
