"""Command-line interface: front dumps, solver runs, counterexamples and checks.

Exit codes: 0 success, 2 configuration error, 3 computational error or a
failed check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments as ex
from . import hamiltonian as ham
from . import initial_data as idata
from . import io as hio
from . import wavefront as wf
from .errors import ComputationError, ConfigError
from .solution import uniform_axis

SOLVERS = ("variational", "viscosity", "lax_oleinik", "envelope")


# ---------------------------------------------------------------- config parsing

def _load_spec(text):
    """Builtin name, inline JSON, or a path to a JSON file."""
    if text is None:
        return None
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    s = text.strip()
    if s.startswith("{") or s.startswith("["):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid inline JSON: {exc}") from None
    return s


def _hamiltonian(text):
    if text is None:
        raise ConfigError("--h is required")
    return ham.from_spec(_load_spec(text))


def _condition(text):
    if text is None:
        raise ConfigError("--u0 is required")
    return idata.from_spec(_load_spec(text))


def _axes(args, dim):
    if args.grid is None:
        raise ConfigError("--grid LO HI STEP is required")
    lo, hi, step = args.grid
    if not (step > 0 and hi > lo):
        raise ConfigError("grid needs LO < HI and STEP > 0")
    axes = [uniform_axis(lo, hi, step)]
    if dim == 2:
        g2 = args.grid2 or args.grid
        lo2, hi2, st2 = g2
        if not (st2 > 0 and hi2 > lo2):
            raise ConfigError("grid2 needs LO < HI and STEP > 0")
        axes.append(uniform_axis(lo2, hi2, st2))
    return tuple(axes)


def _check_time(t):
    if t is None or not np.isfinite(t) or t < 0:
        raise ConfigError(f"t must be a finite non-negative number (got {t})")
    return float(t)


def _merge_config(args):
    """Fill unset flags from a RunConfig JSON file (--config)."""
    if not getattr(args, "config", None):
        return args
    if not os.path.exists(args.config):
        raise ConfigError(f"config file {args.config} does not exist")
    with open(args.config) as fh:
        cfg = json.load(fh)
    for key, val in cfg.items():
        key = key.replace("-", "_")
        if key in ("h", "u0") and not isinstance(val, str):
            val = json.dumps(val)
        if getattr(args, key, None) in (None, False):
            setattr(args, key, val)
    return args


def _out(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _hash(obj):
    return ham.spec_hash(obj.spec) if getattr(obj, "spec", None) else None


# ---------------------------------------------------------------- commands

def cmd_front(args):
    H, u0 = _hamiltonian(args.h), _condition(args.u0)
    t = _check_time(args.t)
    if H.dim != u0.dim:
        raise ConfigError("Hamiltonian and data dimensions differ")
    if u0.dim == 1:
        domain = tuple(args.domain) if args.domain else None
        front = wf.build_front_1d(H, u0, t, domain)
    else:
        front = wf.build_front_cloud(H, u0, t, _axes(args, 2), n_fan=args.n_fan)
    out = _out(args)
    path = os.path.join(out, "front.csv")
    hio.write_front(path, front)
    meta = {"t": t, "dim": front.dim, "branches": [b.source for b in front.branches],
            "n_points": int(len(front.points()["S"])), "H_spec_hash": _hash(H),
            "u0_spec_hash": _hash(u0)}
    hio.write_json(path + ".json", meta)
    return {"files": [path, path + ".json"], "branches": len(front.branches)}


def cmd_solve(args):
    from .variational import envelope_solve, family_from_condition, variational_solve
    from .viscosity import lax_oleinik, make_scheme, viscosity_solve
    H, u0 = _hamiltonian(args.h), _condition(args.u0)
    t = _check_time(args.t)
    if H.dim != u0.dim:
        raise ConfigError("Hamiltonian and data dimensions differ")
    axes = _axes(args, u0.dim)
    grid = axes if u0.dim == 2 else axes[0]
    if args.solver == "variational":
        sol = variational_solve(H, u0, t, grid)
    elif args.solver == "viscosity":
        sol = viscosity_solve(H, u0, t, make_scheme(H, u0, t, axes, args.cfl))
    elif args.solver == "lax_oleinik":
        if u0.dim != 1:
            raise ConfigError("lax_oleinik is implemented for d = 1")
        sol = lax_oleinik(H, u0, t, grid)
    else:
        sol = envelope_solve(H, family_from_condition(u0), t, grid)
        sol = type(sol)(sol.t, sol.axes, sol.values, sol.provenance, {})
    out = _out(args)
    path = os.path.join(out, f"solution_{args.solver}.csv")
    hio.write_solution(path, sol, _hash(H), _hash(u0))
    return {"files": [path, path + ".json"]}


def cmd_counterexample(args):
    out = _out(args)
    if args.scenario == "dim1":
        H = _hamiltonian(args.h)
        t_list = tuple(args.t) if args.t else (0.1, 0.05, 0.025)
        for t in t_list:
            _check_time(t)
        rep = ex.run_counterexample_1d(H, t_list, args.dx or 1e-3, tuple(args.window or (-0.5, 0.5)),
                                       cfl=args.cfl, out_dir=out)
        return {"files": [os.path.join(out, "dim1_report.json")] + rep.artifacts,
                "lax_margin": rep.margins["lax"], "witness_gap": rep.witness["gap"]}
    if args.scenario == "saddle":
        if args.a is None or args.b is None or not args.t:
            raise ConfigError("saddle needs --a, --b and --t")
        rep, _ = ex.run_counterexample_saddle(args.a, args.b, _check_time(args.t[0]),
                                              args.dx or 2e-3, cfl=args.cfl,
                                              cross_check=not args.no_cross_check, out_dir=out)
        return {"files": [os.path.join(out, "saddle_report.json")] + rep.artifacts,
                "entropy_margin": rep.margins["entropy"], "witness_gap": rep.witness["gap"]}
    # smoothing
    if not args.report:
        raise ConfigError("smoothing needs --report PATH")
    rep = ex.CounterexampleReport.read(args.report)
    H = _hamiltonian(args.h) if args.h else ham.from_spec(
        rep.params.get("H_input") or rep.params["H"])
    eps = tuple(args.eps) if args.eps else ex.EPS_SWEEP
    res = ex.run_smoothing_argument(H, rep, eps)
    path = os.path.join(out, "smoothing.json")
    hio.write_json(path, res)
    return {"files": [path], "alpha": res["alpha"], "exists_eps": res["exists_eps"]}


def cmd_check(args):
    """Quick property suites; exit 3 when any suite fails."""
    rng = np.random.default_rng(args.seed)
    results = {}
    if args.suite in ("entropy", "all"):
        bad = 0
        cat = ham.catalog_1d()
        for _ in range(args.n):
            H = cat[rng.integers(len(cat))]
            p1, p2 = rng.uniform(-1.5, 1.5, 2)
            if abs(p1 - p2) < 1e-3:
                continue
            e = ham.check_entropy_condition(H, p1, p2)
            if e.strict and not ham.check_lax_condition(H, min(p1, p2), max(p1, p2)).holds:
                bad += 1
        results["entropy_implies_lax"] = bad == 0
    if args.suite in ("ete", "all"):
        ok = True
        for _ in range(args.n):
            X, Y = rng.normal(size=(20, 2)), rng.normal(size=(15, 2))
            x, y = rng.normal(size=2), rng.normal(size=2)
            ok &= idata.enhanced_triangle_check(x, y, X, Y)
        results["enhanced_triangle"] = bool(ok)
    if args.suite in ("scheme", "all"):
        from . import _kernels
        k = _kernels.backend()
        ok = True
        for _ in range(args.n):
            # |slopes| <= 2 keeps θ = 2 above max|H'| for H = p²/2; dt θ/h = 0.8
            u = np.cumsum(rng.uniform(-0.2, 0.2, 9))
            h, th, dt = 0.1, 2.0, 0.04
            pm, pp = k.lf_diffs_1d(u, h)
            base = k.lf_update_1d(u, 0.5 * (0.5 * (pm + pp)) ** 2, pm, pp, th, dt)
            j = int(rng.integers(1, 8))
            v = u.copy()
            v[j] += rng.uniform(0.0, 1e-3)
            pm2, pp2 = k.lf_diffs_1d(v, h)
            new = k.lf_update_1d(v, 0.5 * (0.5 * (pm2 + pp2)) ** 2, pm2, pp2, th, dt)
            ok &= bool(np.all(new[1:-1] >= base[1:-1] - 1e-15))
        results["scheme_monotone"] = bool(ok)
    if args.out:
        hio.write_json(os.path.join(_out(args), "check.json"), results)
    return {"results": results, "failed": [k for k, v in results.items() if not v]}


# ---------------------------------------------------------------- parser

def _common(p, need_h=True, need_u0=True):
    p.add_argument("--config", help="RunConfig JSON filling unset flags")
    p.add_argument("--h", help="Hamiltonian: builtin name, inline JSON or JSON path")
    if need_u0:
        p.add_argument("--u0", help="initial condition: builtin name, inline JSON or JSON path")
    p.add_argument("--out", help="output directory (default: current)")


def build_parser():
    parser = argparse.ArgumentParser(prog="hjlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("front", help="dump the time-t wavefront as CSV")
    _common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--domain", type=float, nargs=2, metavar=("LO", "HI"),
                   help="1D base interval (default: profile domain)")
    p.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"),
                   help="2D base grid along q1")
    p.add_argument("--grid2", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--n-fan", type=int, default=65)
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("solve", help="solve on a grid and write a SolutionGrid CSV")
    _common(p)
    p.add_argument("--solver", choices=SOLVERS, required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--grid2", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--cfl", type=float, default=0.9)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("counterexample", help="run a counterexample scenario and emit its report")
    p.add_argument("scenario", choices=("dim1", "saddle", "smoothing"))
    _common(p, need_u0=False)
    p.add_argument("--t", type=float, nargs="+")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--cfl", type=float, default=0.9)
    p.add_argument("--no-cross-check", action="store_true",
                   help="skip the minimal-section cross-check of the envelope (saddle)")
    p.add_argument("--report", help="scenario report JSON (smoothing)")
    p.add_argument("--eps", type=float, nargs="+")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("check", help="run quick property suites")
    p.add_argument("--suite", choices=("entropy", "ete", "scheme", "all"), default="all")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        if args.command == "counterexample" and args.scenario == "dim1" and not args.h:
            raise ConfigError("dim1 needs --h")
        result = args.func(args)
    except ConfigError as exc:
        print(f"hjlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"hjlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(hio._clean(result), sort_keys=True))
    if args.command == "check" and result["failed"]:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
