"""Command-line entry point: ``nodalkit <command> [options]``.

Exit status is 0 when every checked bound holds and nothing failed, 1 when a
bound is violated or a construction fails, and 2 on input errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis_construction import (
    ConstructionConfig,
    construct_signed_basis,
    perturbation_stability_test,
    validate_signed_basis,
)
from .exceptions import NodalKitError, ParseError, ReducibleMatrixError
from .graph_core import (
    DEFAULT_FRUSTRATION_CAP,
    connected_components,
    frustration_index_exact,
    frustration_index_heuristic,
    graph_invariants,
)
from .io import plain, read_input, read_vector, to_csv_text, to_json_text
from .nodal import (
    DEFAULT_EXACT_CAP,
    nodal_decomposition,
    normalize_convention,
    path_domain_counts,
    verify_generic_bounds,
)
from .random_experiments import CliqueDomainConfig, ExperimentConfig, run_experiment
from .spectral import (
    eigendecompose,
    eigenspace_common_zeros,
    group_eigenvalues,
    vector_zero_tol,
)

CSV_COLUMNS = ("seed", "i", "kappa_gt", "N_heur", "clique_count", "leftover", "max_size",
               "bound_ok")


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    n: int | None = None
    p: float | None = None
    q: float | None = None
    seed: int = 0
    seeds: int = 1
    zero_tol: float = 1e-9
    group_tol: float | None = None
    convention: str = "laplacian"
    exact_cap: int = DEFAULT_EXACT_CAP
    frustration_cap: int = DEFAULT_FRUSTRATION_CAP
    k: int = 2
    s: int | None = None
    trials: int = 0
    fmt: str = "json"
    out: str | None = None
    vector: str | None = None
    index: int | None = None
    eigenvalue: float | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.command == "experiment":
            if self.input is not None:
                raise ValueError("experiment takes --n/--p/--q, not --input")
            if None in (self.n, self.p, self.q):
                raise ValueError("experiment needs --n, --p and --q")
        elif self.input is None:
            raise ValueError(f"{self.command} needs --input")
        if self.exact_cap < 1 or self.frustration_cap < 1:
            raise ValueError("caps must be at least 1")
        if self.seeds < 1:
            raise ValueError("--seeds must be at least 1")
        normalize_convention(self.convention)


def _frustration(G, cap):
    if G.n <= cap:
        return frustration_index_exact(G, cap)
    return frustration_index_heuristic(G, seed=0, restarts=16)


def _load(cfg):
    M, G = read_input(cfg.input)
    comps = connected_components(G)
    return M, G, comps


def cmd_analyze(cfg: RunConfig):
    M, G, comps = _load(cfg)
    report = {"n": G.n, "components": len(comps)}
    if len(comps) != 1:
        report["warning"] = "reducible matrix; bounds need an irreducible matrix"
        report["component_sets"] = [sorted(c) for c in comps]
        return report, False
    spec = eigendecompose(M)
    groups = group_eigenvalues(spec, cfg.group_tol)
    inv = graph_invariants(G)
    fr = _frustration(G, cfg.frustration_cap)
    report.update({"nu": inv.nu, "f": fr.f, "f_exact": fr.exact,
                   "eigenvalues": spec.eigenvalues, "groups": []})
    ok = True
    for g in groups:
        i0 = eigenspace_common_zeros(g, cfg.zero_tol)
        entry = {"eigenvalue": g.lam, "k": g.k, "r": g.r, "i0": sorted(i0), "vectors": []}
        for c in range(g.r):
            phi = g.basis[:, c]
            tol = vector_zero_tol(phi, cfg.zero_tol)
            pc = path_domain_counts(G, M, phi, cfg.convention, tol)
            rec = {"column": g.k - 1 + c, "path_counts": {
                "lt": pc.kappa_lt, "le": pc.kappa_le, "gt": pc.kappa_gt, "ge": pc.kappa_ge}}
            if np.any(np.abs(phi) <= tol):
                rec["vanishing"] = True
            else:
                rep = verify_generic_bounds(M, g, phi, f=fr.f, G=G, exact_cap=cfg.exact_cap,
                                            zero_tol=tol)
                rec["report"] = rep.to_json()
                ok = ok and rep.satisfied
            entry["vectors"].append(rec)
        report["groups"].append(entry)
    report["all_satisfied"] = ok
    return report, ok


def _selected_groups(cfg, M):
    spec = eigendecompose(M)
    groups = group_eigenvalues(spec, cfg.group_tol)
    if cfg.eigenvalue is not None:
        groups = [min(groups, key=lambda g: abs(g.lam - cfg.eigenvalue))]
    return groups


def cmd_construct_basis(cfg: RunConfig):
    M, G, comps = _load(cfg)
    if len(comps) != 1:
        raise ReducibleMatrixError(comps)
    ccfg = ConstructionConfig(seed=cfg.seed, zero_tol=cfg.zero_tol,
                              frustration_cap=cfg.frustration_cap, exact_cap=cfg.exact_cap)
    out = {"n": G.n, "results": []}
    ok = True
    for g in _selected_groups(cfg, M):
        res = construct_signed_basis(M, g, config=ccfg)
        reps = validate_signed_basis(M, g, res, exact_cap=cfg.exact_cap)
        entry = res.to_json()
        entry["validation"] = [{"s": r.s, "N": r.N, "bound": r.upper, "satisfied": r.satisfied,
                                "problems": list(r.problems)} for r in reps]
        ok = ok and all(r.satisfied for r in reps)
        if cfg.trials > 0:
            frac = perturbation_stability_test(M, g, res, 1.0, cfg.trials, cfg.seed)
            entry["perturbation_stability"] = frac
            ok = ok and frac == 1.0
        out["results"].append(entry)
    out["all_satisfied"] = ok
    return out, ok


def cmd_experiment(cfg: RunConfig):
    ecfg = ExperimentConfig(
        n=cfg.n, p=cfg.p, q=cfg.q, seeds=tuple(range(cfg.seed, cfg.seed + cfg.seeds)),
        clique=CliqueDomainConfig(k=cfg.k, s=cfg.s),
    )
    res = run_experiment(ecfg)
    rows = [{"seed": st.seed, "i": st.index, "kappa_gt": st.kappa_gt, "N_heur": st.N_heur,
             "clique_count": st.clique_count, "leftover": st.leftover, "max_size": st.max_size,
             "bound_ok": st.bound_ok} for st in res.stats]
    summary = res.summary()
    ok = summary["path_trivial_rate"] == 1.0 and summary["bound_ok_rate"] == 1.0
    return {"summary": summary, "records": [st.to_json() for st in res.stats], "rows": rows}, ok


def cmd_frustration(cfg: RunConfig):
    M, G, comps = _load(cfg)
    fr = _frustration(G, cfg.frustration_cap)
    inv = graph_invariants(G)
    return {"n": G.n, "m": G.m, "f": fr.f, "exact": fr.exact, "witness": fr.witness,
            "kappa": inv.kappa, "nu": inv.nu, "e_pos": inv.e_pos, "e_neg": inv.e_neg}, True


def cmd_nodal(cfg: RunConfig):
    M, G, comps = _load(cfg)
    if cfg.vector is not None:
        x = read_vector(cfg.vector)
        if x.shape != (G.n,):
            raise ParseError(cfg.vector, 1, f"expected {G.n} entries, found {x.size}")
    else:
        idx = 0 if cfg.index is None else cfg.index
        x = eigendecompose(M).eigenvectors[:, idx]
    tol = vector_zero_tol(x, cfg.zero_tol)
    dec = nodal_decomposition(G, M, x, cfg.convention, zero_tol=tol, exact_cap=cfg.exact_cap,
                              seed=cfg.seed)
    pc = path_domain_counts(G, M, x, cfg.convention, tol)
    return {"N": dec.size, "certified_minimal": dec.certified_minimal,
            "parts": dec.as_lists(), "path_counts": {"lt": pc.kappa_lt, "le": pc.kappa_le,
                                                     "gt": pc.kappa_gt, "ge": pc.kappa_ge}}, True


COMMANDS = {
    "analyze": cmd_analyze,
    "construct-basis": cmd_construct_basis,
    "experiment": cmd_experiment,
    "frustration": cmd_frustration,
    "nodal": cmd_nodal,
}


def _text(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, dict) or (isinstance(v, list) and any(isinstance(x, (dict, list))
                                                                    for x in v)):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            elif isinstance(v, list):
                lines.append(f"{pad}{k}: {' '.join(str(x) for x in v)}")
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        lines = []
        for v in obj:
            if isinstance(v, list) and not any(isinstance(x, (dict, list)) for x in v):
                lines.append(f"{pad}- {' '.join(str(x) for x in v)}")
            elif isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
        return "\n".join(lines)
    return f"{pad}{obj}"


def render(command, report, fmt):
    if fmt == "json":
        if command == "experiment":
            report = {"summary": report["summary"], "records": report["records"]}
        return to_json_text(report)
    if fmt == "csv":
        if command == "experiment":
            return to_csv_text(report["rows"], CSV_COLUMNS)
        raise ValueError("csv output is available for the experiment command only")
    if command == "experiment":
        report = report["summary"]
    return _text(plain(report)) + "\n"


def build_parser():
    ap = argparse.ArgumentParser(prog="nodalkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nodalkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", help="edge list, .mtx or .npy file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--zero-tol", type=float, default=1e-9)
        sp.add_argument("--group-tol", type=float, default=None)
        sp.add_argument("--convention", choices=("laplacian", "adjacency"), default=None)
        sp.add_argument("--exact-cap", type=int, default=DEFAULT_EXACT_CAP)
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--out", default=None)
        if name == "experiment":
            sp.add_argument("--n", type=int, required=True)
            sp.add_argument("--p", type=float, required=True)
            sp.add_argument("--q", type=float, required=True)
            sp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
            sp.add_argument("--k", type=int, default=2)
            sp.add_argument("--s", type=int, default=None)
        if name == "construct-basis":
            sp.add_argument("--trials", type=int, default=0)
            sp.add_argument("--eigenvalue", type=float, default=None)
        if name == "nodal":
            sp.add_argument("--vector", default=None)
            sp.add_argument("--index", type=int, default=None,
                            help="use this eigenvector column (0-based) of the input matrix")
    return ap


def config_from_args(ns) -> RunConfig:
    conv = ns.convention or ("adjacency" if ns.command == "experiment" else "laplacian")
    return RunConfig(
        command=ns.command, input=ns.input, n=getattr(ns, "n", None), p=getattr(ns, "p", None),
        q=getattr(ns, "q", None), seed=ns.seed, seeds=getattr(ns, "seeds", 1),
        zero_tol=ns.zero_tol, group_tol=ns.group_tol, convention=conv,
        exact_cap=ns.exact_cap, k=getattr(ns, "k", 2), s=getattr(ns, "s", None),
        trials=getattr(ns, "trials", 0), fmt=ns.format, out=ns.out,
        vector=getattr(ns, "vector", None), index=getattr(ns, "index", None),
        eigenvalue=getattr(ns, "eigenvalue", None),
    )


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        cfg.validate()
        report, ok = COMMANDS[cfg.command](cfg)
        text = render(cfg.command, report, cfg.fmt)
    except (ParseError, ValueError, OSError) as exc:
        print(f"nodalkit: error: {exc}", file=sys.stderr)
        return 2
    except NodalKitError as exc:
        print(f"nodalkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
