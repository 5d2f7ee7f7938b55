"""Command-line front end: file ingestion, dispatch, report emission.

Exit codes: 0 success, 1 domain or input error, 2 inequality-audit violation
(an observed ratio at or below its proved bound, which must never happen).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from . import report as rep
from . import sampling as smp
from . import verify as vfy
from .graphs import load_graph, metrics
from .polytrig import GraphFunction, IntervalUnion, PolyTrigTerm, norm_sq
from .spectral import eigenvalues_up_to, solve_torsion, spectral_sample


@dataclass
class RunConfig:
    graph_path: str | None = None
    set_path: str | None = None
    out_path: str | None = None
    fmt: str = "json"
    seed: int = vfy.DEFAULT_SEED
    lam_max: float = 100.0


def _positive(value: str) -> float:
    x = float(value)
    if x <= 0.0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _vertices(value: str) -> list[str]:
    return [v for v in value.split(",") if v]


def _load(args, need_set=False):
    g, y = load_graph(args.graph)
    sset = None
    if need_set or getattr(args, "set", None):
        if not getattr(args, "set", None):
            raise ValueError("a sampling-set file is required (--set)")
        sset = smp.SamplingSet.load(g, args.set)
    return g, y, sset


def _emit(args, payload: dict) -> None:
    rep.emit(rep.json_dumps(payload), getattr(args, "out", None))


def _random_sample(g, y, lam_max, modes, seed):
    pairs = eigenvalues_up_to(g, y, lam_max)
    if not pairs:
        raise ValueError(f"no eigenvalues at or below {lam_max}")
    rng = np.random.default_rng(seed)
    take = rng.choice(len(pairs), size=min(modes, len(pairs)), replace=False)
    chosen = [pairs[i] for i in sorted(take)]
    coeffs = rng.normal(size=len(chosen)) + 1j * rng.normal(size=len(chosen))
    f = spectral_sample(chosen, coeffs)
    return f, max(p.lam for p in chosen), chosen


def _certify(g, sset, grid_n):
    """Per-edge optimal gamma at the smallest workable rho, aggregated."""
    gammas, rhos = {}, {}
    covers = {}
    for eid, iu in sset.finite.items():
        ell = g.edge_lengths[eid]
        res_r = smp.optimal_rho(iu, ell, gamma=1e-6, grid_n=grid_n)
        if not res_r.feasible:
            raise ValueError(f"edge {eid!r}: set cannot be certified")
        res_g = smp.optimal_gamma(iu, ell, rho=res_r.rho, grid_n=grid_n)
        if not res_g.feasible:
            raise ValueError(f"edge {eid!r}: set cannot be certified")
        gammas[eid], rhos[eid] = res_g.gamma, res_r.rho
        covers[eid] = res_g.breakpoints
    gamma, rho = smp.graph_params(gammas, rhos)
    params = smp.verify_cover(sset, smp.Cover(breakpoints=covers), gamma=gamma,
                              rho=rho)
    if not isinstance(params, smp.SamplingParams):
        raise ValueError(f"certification failed: {params.issues}")
    return params


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_spectrum(args) -> int:
    g, y, _ = _load(args)
    pairs = eigenvalues_up_to(g, y, args.lambda_max)
    _emit(args, {"count": len(pairs), "lambda_max": args.lambda_max,
                 "eigenvalues": [p.to_json() for p in pairs]})
    return 0


def _cmd_torsion(args) -> int:
    g, _, _ = _load(args)
    dirichlet = args.dirichlet
    sol = solve_torsion(g, dirichlet)
    payload = {"rigidity": sol.rigidity, "dirichlet": list(sol.dirichlet),
               **sol.function.to_json()}
    _emit(args, payload)
    return 0


def _cmd_sampling(args) -> int:
    g, _, sset = _load(args, need_set=True)
    if args.sampling_cmd == "verify":
        with open(args.cover, "r", encoding="utf-8") as fh:
            cover = smp.Cover.from_dict(json.load(fh))
        res = smp.verify_cover(sset, cover, gamma=args.gamma, rho=args.rho)
        ok = isinstance(res, smp.SamplingParams)
        _emit(args, {"ok": ok, **res.to_json()})
        return 0 if ok else 1
    if args.sampling_cmd in ("gamma", "rho"):
        out = {}
        for eid, iu in sorted(sset.finite.items()):
            ell = g.edge_lengths[eid]
            if args.sampling_cmd == "gamma":
                res = smp.optimal_gamma(iu, ell, rho=args.rho, grid_n=args.grid)
            else:
                res = smp.optimal_rho(iu, ell, gamma=args.gamma, grid_n=args.grid)
            out[eid] = res.to_json()
        feas = {e: r for e, r in out.items() if r["feasible"]}
        agg = None
        if len(feas) == len(out) and out:
            key = args.sampling_cmd
            vals = {e: r[key] for e, r in out.items()}
            agg = min(vals.values()) if key == "gamma" else max(vals.values())
        _emit(args, {"edges": out, "aggregate": agg})
        return 0
    # gaps
    gaps = smp.gap_analysis(sset)
    payload = {"edges": {e: eg.to_json() for e, eg in sorted(gaps.items())}}
    if args.gamma is not None and args.rho is not None:
        ok, issues = smp.necessary_check(gaps, args.gamma, args.rho)
        payload["necessary_check"] = {"gamma": args.gamma, "rho": args.rho,
                                      "ok": ok, "issues": issues}
    _emit(args, payload)
    return 0


def _cmd_bound(args) -> int:
    cmd = args.bound_cmd
    if cmd == "thm21":
        out = bnd.spectral_bound(args.gamma, args.rho, getattr(args, "lam"))
        _emit(args, out.to_json())
        return 0
    if cmd == "thm26":
        out = bnd.h_bound(args.gamma, h=getattr(args, "h"))
        _emit(args, out.to_json())
        return 0
    if cmd == "cor72":
        g, _, _ = _load(args)
        out = bnd.standard_range(metrics(g), args.k, args.gamma, args.rho)
        _emit(args, out.to_json())
        return 0
    if cmd == "observability":
        out = bnd.observability_constant(
            args.gamma, args.rho, args.horizon, c1=args.c1, c2=args.c2,
            c3=args.c3, k1=args.k1, k2=args.k2, k3=args.k3, k4=args.k4,
            defaults_used=not args.custom_constants)
        _emit(args, out.to_json())
        return 0
    if cmd == "torsion":
        g, _, _ = _load(args)
        sol = solve_torsion(g, args.dirichlet)
        out = bnd.torsion_profile(g, sol, rho=args.rho, gamma=args.gamma)
        _emit(args, out.to_json())
        return 0
    # trace
    g, y, sset = _load(args)
    pairs = eigenvalues_up_to(g, y, args.lambda_max)
    region = sset.region() if sset is not None else None
    masses = []
    for p in pairs:
        mass = norm_sq(p.function, region) if region is not None else 1.0
        masses.append((p.lam, mass))
    out = bnd.heat_trace_bound(masses, gamma=args.gamma, rho=args.rho, t=args.t,
                               total_length=metrics(g).total_length)
    _emit(args, out.to_json())
    return 0


def _parse_intervals(text: str) -> IntervalUnion:
    return IntervalUnion(json.loads(text))


def _cmd_verify(args) -> int:
    cmd = args.verify_cmd
    if cmd == "lasso":
        _emit(args, vfy.lasso_counterexample())
        return 0
    if cmd == "kovrijkine":
        coeffs = [complex(c) for c in json.loads(args.coeffs)]
        out = vfy.kovrijkine_check(coeffs, _parse_intervals(args.e_set),
                                   grid_n=args.grid)
        _emit(args, out.to_json())
        return 0 if out.passed else 2
    if cmd == "local":
        terms = [(complex(t[0], t[1]), int(t[2]), float(t[3]))
                 for t in json.loads(args.terms)]
        out = vfy.local_estimate_check(terms, args.ell,
                                       _parse_intervals(args.s_set),
                                       grid_n=args.grid)
        _emit(args, out.to_json())
        return 0 if out.passed else 2
    if cmd == "optimality":
        out = vfy.optimality_example(args.ell, getattr(args, "lam"), args.gamma)
        _emit(args, out)
        return 0
    if cmd == "trace-ineq":
        rng = np.random.default_rng(args.seed)
        g, _, _ = _load(args)
        reports = []
        for _ in range(args.trials):
            terms = {eid: [PolyTrigTerm(complex(*rng.normal(size=2)),
                                        int(rng.integers(0, 3)),
                                        float(rng.uniform(-8, 8)))
                           for _ in range(int(rng.integers(1, 4)))]
                     for eid in g.edge_ids}
            reports.append(vfy.boundary_trace_check(GraphFunction(g, terms), g))
        ok = all(r.passed for r in reports)
        _emit(args, {"trials": args.trials, "all_passed": ok,
                     "worst_slack": min(r.rhs - r.lhs for r in reports)})
        return 0 if ok else 2

    g, y, sset = _load(args, need_set=cmd in ("ratio", "derivative", "observability"))
    if cmd == "observability":
        params = _certify(g, sset, args.grid)
        out = vfy.observability_numeric(g, y, sset.region(), horizon=args.horizon,
                                        modes=args.modes, params=params)
        _emit(args, out.to_json())
        return 0
    if cmd == "classify":
        f, lam, _ = _random_sample(g, y, args.lambda_max, args.modes, args.seed)
        out = vfy.classify_edges(f, bnd.BernsteinProfile.power_law(lam),
                                 m_max=args.m_max)
        _emit(args, out.to_json())
        return 0
    # ratio / derivative
    f, lam, chosen = _random_sample(g, y, args.lambda_max, args.modes, args.seed)
    params = _certify(g, sset, args.grid)
    if cmd == "ratio":
        out = vfy.compare(f, sset.region(), params, lam=lam)
    else:
        out = vfy.compare_derivative(f, sset.region(), params, lam=lam)
    payload = {"seed": args.seed, "modes": len(chosen), "lam": lam,
               **out.to_json()}
    _emit(args, payload)
    return 0 if (out.passed or out.vacuous) else 2


def _cmd_audit(args) -> int:
    res = vfy.audit(trials=args.trials, seed=args.seed, lam_max=args.lambda_max)
    if args.format == "csv":
        text = rep.csv_dumps(res.rows, rep.AUDIT_COLUMNS)
    else:
        text = rep.json_dumps(res.to_json())
    rep.emit(text, args.out)
    if res.violations:
        print(f"AUDIT VIOLATIONS: {res.violations} of {res.trials} trials",
              file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qgs",
        description="Eigenpairs, sampling-set certification and explicit "
                    "spectral-inequality constants on compact metric graphs.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_common(sp, graph=True, out=True):
        if graph:
            sp.add_argument("--graph", required=True, help="graph JSON file")
        if out:
            sp.add_argument("--out", help="write the report here (default stdout)")

    sp = sub.add_parser("spectrum", help="eigenvalues and eigenfunctions")
    add_common(sp)
    sp.add_argument("--lambda-max", dest="lambda_max", type=_positive, default=100.0)
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("torsion", help="torsion function and rigidity")
    add_common(sp)
    sp.add_argument("--dirichlet", type=_vertices, required=True,
                    help="comma-separated vertex ids")
    sp.set_defaults(func=_cmd_torsion)

    sp = sub.add_parser("sampling", help="sampling-set certification")
    ssub = sp.add_subparsers(dest="sampling_cmd", required=True)
    for name in ("verify", "gamma", "rho", "gaps"):
        s = ssub.add_parser(name)
        add_common(s)
        s.add_argument("--set", required=True, help="sampling-set JSON file")
        if name == "verify":
            s.add_argument("--cover", required=True, help="cover JSON file")
            s.add_argument("--gamma", type=float, required=True)
            s.add_argument("--rho", type=_positive, required=True)
        elif name == "gamma":
            s.add_argument("--rho", type=_positive, required=True)
            s.add_argument("--grid", type=int, default=200)
        elif name == "rho":
            s.add_argument("--gamma", type=float, required=True)
            s.add_argument("--grid", type=int, default=200)
        else:
            s.add_argument("--gamma", type=float)
            s.add_argument("--rho", type=_positive)
        s.set_defaults(func=_cmd_sampling)

    sp = sub.add_parser("bound", help="explicit constants")
    bsub = sp.add_subparsers(dest="bound_cmd", required=True)
    s = bsub.add_parser("thm21")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_bound)
    s = bsub.add_parser("thm26")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_bound)
    s = bsub.add_parser("cor72")
    add_common(s)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.set_defaults(func=_cmd_bound)
    s = bsub.add_parser("trace")
    add_common(s)
    s.add_argument("--set", help="control-set JSON (default: whole graph)")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--t", type=_positive, required=True)
    s.add_argument("--lambda-max", dest="lambda_max", type=_positive, default=100.0)
    s.set_defaults(func=_cmd_bound)
    s = bsub.add_parser("observability")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--horizon", "-T", type=_positive, required=True)
    for name, dflt in (("c1", 1.0), ("c2", 1.0), ("c3", 1.0), ("k1", 1.0),
                       ("k2", 5.0), ("k3", 1.0), ("k4", 48.0)):
        s.add_argument(f"--{name}", type=float, default=dflt)
    s.add_argument("--custom-constants", action="store_true",
                   help="mark the C/K constants as deliberately chosen")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_bound)
    s = bsub.add_parser("torsion")
    add_common(s)
    s.add_argument("--dirichlet", type=_vertices, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.set_defaults(func=_cmd_bound)

    sp = sub.add_parser("verify", help="certification checks")
    vsub = sp.add_subparsers(dest="verify_cmd", required=True)
    for name in ("ratio", "derivative"):
        s = vsub.add_parser(name)
        add_common(s)
        s.add_argument("--set", required=True)
        s.add_argument("--lambda-max", dest="lambda_max", type=_positive,
                       default=100.0)
        s.add_argument("--modes", type=int, default=5)
        s.add_argument("--seed", type=int, default=vfy.DEFAULT_SEED)
        s.add_argument("--grid", type=int, default=200)
        s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("classify")
    add_common(s)
    s.add_argument("--lambda-max", dest="lambda_max", type=_positive, default=100.0)
    s.add_argument("--modes", type=int, default=5)
    s.add_argument("--seed", type=int, default=vfy.DEFAULT_SEED)
    s.add_argument("--m-max", dest="m_max", type=int, default=vfy.DEFAULT_M_MAX)
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("kovrijkine")
    s.add_argument("--coeffs", required=True, help='JSON list, e.g. "[1, 0.5]"')
    s.add_argument("--e-set", dest="e_set", required=True,
                   help='JSON intervals in [0,1], e.g. "[[0, 0.5]]"')
    s.add_argument("--grid", type=int, default=2000)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("local")
    s.add_argument("--terms", required=True,
                   help='JSON list of [re, im, power, freq] terms')
    s.add_argument("--ell", type=_positive, required=True)
    s.add_argument("--s-set", dest="s_set", required=True)
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("optimality")
    s.add_argument("--ell", type=_positive, required=True)
    s.add_argument("--lambda", dest="lam", type=_positive, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("observability")
    add_common(s)
    s.add_argument("--set", required=True)
    s.add_argument("--horizon", "-T", type=_positive, required=True)
    s.add_argument("--modes", type=int, default=4)
    s.add_argument("--grid", type=int, default=200)
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("trace-ineq")
    add_common(s)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=vfy.DEFAULT_SEED)
    s.set_defaults(func=_cmd_verify)
    s = vsub.add_parser("lasso")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("audit", help="randomized inequality campaign")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=vfy.DEFAULT_SEED)
    sp.add_argument("--lambda-max", dest="lambda_max", type=_positive, default=200.0)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_audit)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
