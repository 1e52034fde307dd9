"""Command-line interface (``ksmms``).

Every subcommand reads and writes the JSON file formats of :mod:`ksmms.io`.
Results go to ``--out`` when given and to stdout otherwise.  Exit status is 0
on success, 1 when a verification fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .. import io
from ..errors import KSError, SolverFailure
from ..ksnorm import INF, ks_norm, lp_norm
from ..lipschitz import SolverOptions, feasible_envelope, ks1p_seminorm
from ..maximal import check_covering, greedy_5B, layer_cake, maximal_function, restricted_maximal
from ..sobolev import GridSpec, poincare_report, ws1p_parts, wskp_norm
from ..space import BallScheme, diameter, doubling_constant, enumerate_balls
from . import generators, report as report_mod, suite


def _exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return INF
    p = float(text)
    if not p >= 1:
        raise argparse.ArgumentTypeError(f"exponent must be >= 1 or inf, got {text}")
    return p


def _formats(text: str) -> tuple:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = set(fmts) - set(report_mod.FORMATS)
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {sorted(bad)}")
    return fmts


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _load_space(args, path=None):
    sp = io.load_space(path or args.space)
    if args.probability and sp.total_mass > 0:
        sp = sp.normalized()
    return sp


def _family(args, sp):
    return enumerate_balls(sp, BallScheme(weight_rule=args.weight_rule, ratio=args.ratio))


def _solver(args) -> SolverOptions:
    return SolverOptions(tolerance=args.tol, max_iters=args.max_iters, restarts=args.restarts, seed=args.seed)


def _emit(args, doc) -> None:
    text = io.dumps(suite._clean(doc))
    if args.out:
        io.write_json(suite._clean(doc), args.out)
    else:
        sys.stdout.write(text)


def _grid_sidecar(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".grid.json")


def _load_grid(args):
    doc = io.read_json(args.grid)
    return GridSpec.from_dict(doc["grid"] if "grid" in doc else doc)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args):
    sp = io.load_space(args.space)
    out = {
        "valid": True,
        "points": sp.n,
        "total_mass": sp.total_mass,
        "zero_mass_points": int(np.sum(sp.mass == 0)),
        "diameter": diameter(sp),
        "doubling_constant": doubling_constant(sp),
    }
    if args.fn:
        io.load_function(args.fn, sp.n)
        out["function"] = "ok"
    if args.balls:
        for c, r in io.load_balls(args.balls):
            sp.index_of(c)
            if r < 0:
                raise ValueError(f"negative radius for ball at {c}")
        out["balls"] = "ok"
    fam = _family(args, sp)
    out.update(balls_enumerated=len(fam), covers_singletons=fam.covers_singletons, has_full_ball=fam.has_full_ball)
    _emit(args, out)
    return 0


def cmd_grid(args):
    if args.domain != "unit-cube":
        raise ValueError("only the unit-cube domain is supported")
    g = GridSpec(args.dim, args.n, cell_mass=None if args.mode == "probability" else 1.0)
    if g.n_nodes > generators.MAX_POINTS:
        raise ValueError(f"grid has {g.n_nodes} > {generators.MAX_POINTS} nodes")
    doc = io.space_to_dict(g.space)
    side = {"format_version": 1, "grid": g.to_dict()}
    if args.out:
        io.write_json(doc, args.out)
        io.write_json(side, _grid_sidecar(args.out))
    else:
        sys.stdout.write(io.dumps({"space": doc, "grid": side}))
    return 0


def cmd_gen(args):
    if args.what == "space":
        sp = generators.gen_space(args.kind, args.size, args.seed, probability=args.probability)
        doc = io.space_to_dict(sp)
    else:
        sp = _load_space(args)
        subset = [s for s in (args.subset or "").split(",") if s]
        f = generators.gen_function(args.kind, sp, args.seed, L=args.L, expression=args.expr, subset=subset)
        doc = io.function_to_dict(f)
    _emit(args, doc)
    return 0


def cmd_norm(args):
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    fam = _family(args, sp)
    _emit(args, {"p": args.p, "ks_norm": ks_norm(sp, fam, f, args.p), "lp_norm": lp_norm(sp, f, args.p), "balls": len(fam)})
    return 0


def cmd_seminorm(args):
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    fam = _family(args, sp)
    status = 0
    try:
        res = ks1p_seminorm(sp, fam, f, args.p, _solver(args))
    except SolverFailure as e:
        res = e.best
        status = 1
    diag = {
        "value": res.value,
        "feasibility_residual": res.witness.feasibility_residual,
        "converged": res.diagnostics.get("converged", False),
        "iterations": res.diagnostics.get("iterations", 0),
        "envelope_value": ks_norm(sp, fam, feasible_envelope(sp, f).values, args.p),
        "p": args.p,
    }
    _emit(args, io.function_to_dict(res.witness.values, diag))
    return status


def cmd_wsnorm(args):
    if args.grid:
        g = _load_grid(args)
        f = io.load_function(args.fn, g.n_nodes)
        fam = enumerate_balls(g.space)
        _emit(args, {"k": args.k, "p": args.p, "ws_norm": wskp_norm(g, fam, f, args.k, args.p)})
        return 0
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    ks, semi = ws1p_parts(sp, _family(args, sp), f, args.p, _solver(args))
    _emit(args, {"p": args.p, "ws_norm": ks + semi, "ks_norm": ks, "seminorm": semi})
    return 0


def cmd_poincare(args):
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    rep = poincare_report(sp, _family(args, sp), f, args.p, _solver(args))
    _emit(args, rep)
    return 0 if rep["ok_derived"] else 1


def cmd_maximal(args):
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    mf = maximal_function(sp, f) if args.restrict is None else restricted_maximal(sp, f, args.restrict)
    _emit(args, io.function_to_dict(mf))
    return 0


def cmd_cover(args):
    sp = _load_space(args)
    balls = io.load_balls(args.balls)
    sel = greedy_5B(sp, balls)
    chk = check_covering(sp, balls, sel)
    _emit(args, {
        "format_version": 1,
        "selected": [{"index": i, "center": balls[i][0], "radius": balls[i][1]} for i in sel.selected],
        "expansion_factor": sel.expansion_factor,
        "check": chk,
    })
    return 0 if chk["ok"] else 1


def cmd_layercake(args):
    sp = _load_space(args)
    f = io.load_function(args.fn, sp.n)
    psi = [float(c) for c in args.psi.split(",")]
    rep = layer_cake(sp, f, psi)
    _emit(args, rep)
    return 0 if rep["ok"] else 1


def _suite_config(args):
    trials = {}
    for item in args.trials or []:
        name, _, count = item.partition("=")
        trials[name] = int(count)
    return suite.SuiteConfig(
        seed=args.seed,
        trials=trials,
        trial_scale=args.scale,
        probability_mode=args.probability,
        solver_tolerance=args.tol,
        solver_max_iters=args.max_iters,
        checks=tuple(args.checks.split(",")) if args.checks else None,
    )


def _print_summary(rep, stream):
    s = rep["summary"]
    for name, c in s["checks"].items():
        stream.write(f"{'PASS' if c['ok'] else 'FAIL'}  {name:<26} {c['passed']}/{c['trials']}\n")
    stream.write(f"{s['passed']}/{s['total']} records passed\n")


def cmd_verify(args):
    cfg = _suite_config(args)

    def progress(name, recs):
        if args.verbose:
            sys.stderr.write(f"{name}: {sum(r['passed'] for r in recs)}/{len(recs)}\n")

    rep = suite.run_suite(cfg, progress)
    report_mod.emit_report(rep, args.out or "ksmms-report", args.format)
    _print_summary(rep, sys.stdout)
    return 0 if rep["summary"]["ok"] else 1


def cmd_replay(args):
    rep = io.read_json(args.report)
    rec = suite.replay(rep, args.record)
    _emit(args, rec)
    return 0 if rec["passed"] else 1


def cmd_report(args):
    rep = io.read_json(args.report)
    report_mod.emit_report(rep, args.out or "ksmms-report", args.format)
    _print_summary(rep, sys.stdout)
    return 0 if rep["summary"]["ok"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="root random seed (default 42)")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--probability-mode", dest="probability", action="store_true", default=True, help="normalize measures to total mass one (default)")
    mode.add_argument("--raw-measure", dest="probability", action="store_false", help="keep measures as given")
    common.add_argument("--out", help="output file (directory for verify/report)")
    common.add_argument("--format", type=_formats, default=report_mod.FORMATS, help="report formats, comma separated (json,csv,svg)")
    common.add_argument("--ratio", type=float, default=0.5, help="geometric weight ratio of the ball family")
    common.add_argument("--weight-rule", choices=("geometric", "uniform"), default="geometric")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-6, help="relative duality-gap tolerance")
    solver.add_argument("--max-iters", type=int, default=50_000)
    solver.add_argument("--restarts", type=int, default=0, help="extra random starts")

    parser = argparse.ArgumentParser(prog="ksmms", description="Kuelbs-Steadman norms and maximal operators on finite metric measure spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, parents=(common,)):
        p = sub.add_parser(name, help=help, parents=list(parents))
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check a space file (and optional function/ball files)")
    p.add_argument("--space", required=True)
    p.add_argument("--fn")
    p.add_argument("--balls")

    p = add("grid", cmd_grid, "write a uniform grid space plus a grid sidecar")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="nodes per axis")
    p.add_argument("--domain", default="unit-cube")
    p.add_argument("--mode", choices=("probability", "raw"), default="probability")

    p = add("gen", cmd_gen, "generate a synthetic space or function")
    p.add_argument("what", choices=("space", "fn"))
    p.add_argument("--kind", required=True)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--space", help="space file (for gen fn)")
    p.add_argument("--L", type=float, default=1.0, help="Lipschitz bound for random-lipschitz")
    p.add_argument("--expr", help="expression for polynomial, e.g. 'x1^2 + sin(x2)'")
    p.add_argument("--subset", help="comma separated point ids for indicator")

    for name, func, helptext in (
        ("norm", cmd_norm, "KS^p and L^p norms of a function"),
        ("seminorm", cmd_seminorm, "Lipschitz-type KS semi-norm; writes the witness"),
        ("poincare", cmd_poincare, "Poincare inequality report"),
    ):
        p = add(name, func, helptext, (common, solver))
        p.add_argument("--space", required=True)
        p.add_argument("--fn", required=True)
        p.add_argument("--p", type=_exponent, default=2.0)

    p = add("wsnorm", cmd_wsnorm, "Sobolev-type norm on a space, or of order k on a grid", (common, solver))
    p.add_argument("--space")
    p.add_argument("--grid", help="grid sidecar file; selects the order-k grid norm")
    p.add_argument("--fn", required=True)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--k", type=int, default=1)

    p = add("maximal", cmd_maximal, "maximal function of a function")
    p.add_argument("--space", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--restrict", type=float, help="only balls of radius < R")

    p = add("cover", cmd_cover, "greedy disjoint subfamily whose 5-fold dilations cover")
    p.add_argument("--space", required=True)
    p.add_argument("--balls", required=True)

    p = add("layercake", cmd_layercake, "both sides of the layer-cake identity")
    p.add_argument("--space", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--psi", required=True, help="ascending coefficients of psi, e.g. '0,2' for psi(s)=2s")

    p = add("verify", cmd_verify, "run the randomized property suite", (common, solver))
    p.add_argument("--scale", type=float, default=1.0, help="multiply default trial counts")
    p.add_argument("--trials", action="append", metavar="CHECK=N", help="override one check's trial count")
    p.add_argument("--checks", help="comma separated subset of checks")
    p.add_argument("-v", "--verbose", action="store_true")

    p = add("replay", cmd_replay, "re-run one record of a report")
    p.add_argument("--report", required=True)
    p.add_argument("--record", required=True, help="record id, e.g. holder/0007")

    p = add("report", cmd_report, "re-emit a JSON report as CSV/SVG")
    p.add_argument("--report", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "wsnorm" and not (args.grid or args.space):
        parser.error("wsnorm needs --space or --grid")
    if getattr(args, "command", None) == "gen" and args.what == "fn" and not args.space:
        parser.error("gen fn needs --space")
    try:
        return args.func(args)
    except (KSError, ValueError, KeyError, IndexError) as e:
        sys.stderr.write(f"ksmms {args.command}: {type(e).__name__}: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
