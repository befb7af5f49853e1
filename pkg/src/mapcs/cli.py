"""Command-line entry point.

Data goes to ``--out`` (``-`` for stdout); diagnostics go to stderr.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness, phase, selftest
from .core import AUTO, AnnealSchedule, SolverConfig, Variant
from .instances import GenSpec, make_instance
from .oracle import l1_min_enum, l1_min_lp
from .solvers import run

log = logging.getLogger("mapcs")

MATRIX_KINDS = {"dense": 1.0, "sparse10": 0.1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _grid(text: str) -> list:
    """``a,b,c`` or ``lo:hi:step``."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            return harness.frange(lo, hi, step)
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def _k0(text: str):
    if text == AUTO:
        return AUTO
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k0 must be 'auto' or a number, got {text!r}")


def _common(p: argparse.ArgumentParser, *, decay, max_steps, k0_scale=1.0, solver="map-gamma"):
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--trials", type=int)
    p.add_argument("--solver", choices=[v.value for v in Variant], default=solver)
    p.add_argument("--gamma", type=float, default=1.0, help="constant partition ratio for --solver partial")
    p.add_argument("--decay", type=float, default=decay)
    p.add_argument("--k0", type=_k0, default=AUTO)
    p.add_argument("--k0-scale", type=float, default=k0_scale)
    p.add_argument("--k-floor", type=float, default=1e-9)
    p.add_argument("--max-steps", type=int, default=max_steps)
    p.add_argument("--mse-threshold", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix", choices=sorted(MATRIX_KINDS), default="dense")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true",
                   help="full-size protocol (hours of compute)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mapcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("reconstruct", help="solve one generated instance, print RunResult JSON")
    _common(p, decay=0.95, max_steps=2000, solver="amp")

    p = sub.add_parser("phase-diagram", help="success-rate grid over (alpha, rho)")
    _common(p, decay=0.999, max_steps=2000, k0_scale=0.01)
    p.add_argument("--alphas", type=_grid, help="alpha grid: a,b,c or lo:hi:step")
    p.add_argument("--rhos", type=_grid, help="rho grid: a,b,c or lo:hi:step")

    p = sub.add_parser("threshold-curve", help="theoretical rho_c(alpha) as CSV")
    p.add_argument("--alphas", type=_grid, default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("convergence", help="mean MSE trace per solver")
    _common(p, decay=0.95, max_steps=1000)
    p.add_argument("--solvers", default="map-gamma,amp")

    p = sub.add_parser("oracle", help="exact l1 minimization of a small instance")
    _common(p, decay=0.999, max_steps=1)
    p.add_argument("--method", choices=["lp", "enum"], default="lp")

    sub.add_parser("selftest", help="fast invariant checks")
    return parser


def _solver(args, variant=None) -> SolverConfig:
    sched = AnnealSchedule(k0=args.k0, decay=args.decay, k_floor=args.k_floor, k0_scale=args.k0_scale)
    return SolverConfig(variant=variant or args.solver, gamma=args.gamma, anneal=sched,
                        max_steps=args.max_steps, mse_success_threshold=args.mse_threshold)


def _gen(args, n_default: int) -> GenSpec:
    n = args.n or n_default
    return GenSpec.from_ratios(n, args.alpha, args.rho, seed=args.seed,
                               keep_fraction=MATRIX_KINDS[args.matrix])


def _emit(args, text: str):
    if args.out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def cmd_reconstruct(args):
    inst = make_instance(_gen(args, 500))
    res = run(inst, _solver(args))
    if res.error:
        log.warning("run stopped early: %s", res.error)
    _emit(args, res.to_json() + "\n")


def cmd_phase_diagram(args):
    if args.paper_scale:
        n, trials, steps = harness.FULL["n"], harness.FULL["trials"], harness.FULL["max_steps"]
        step = harness.FULL["grid_step_count"] / n
        alphas = args.alphas or harness.frange(step, 1 - step, step)
        rhos = args.rhos or harness.frange(step, 1 - step, step)
        args.max_steps, args.k0_scale = steps, 1.0
    else:
        n, trials = harness.DESK["n"], harness.DESK["trials"]
        alphas = args.alphas or [args.alpha]
        rhos = args.rhos or harness.frange(0.02, 0.3, 0.02)
    spec = harness.PhaseGridSpec(n=args.n or n, alphas=alphas, rhos=rhos,
                                 trials=args.trials or trials, solver=_solver(args),
                                 base_seed=args.seed, keep_fraction=MATRIX_KINDS[args.matrix])
    log.info("phase diagram: success means per-entry MSE < %g", args.mse_threshold)
    cells = harness.phase_sweep(spec, jobs=args.jobs)
    if args.format == "json":
        doc = {"mse_success_threshold": args.mse_threshold,
               "cells": [dict(alpha=c.alpha, rho=c.rho, m=c.m, k=c.k, trials=c.trials,
                              successes=c.successes, rate=c.rate, mean_steps=c.mean_steps)
                         for c in cells]}
        _emit(args, json.dumps(doc) + "\n")
    else:
        _emit(args, harness.phase_csv(cells))


def cmd_threshold_curve(args):
    pts = phase.threshold_curve(args.alphas)
    if args.format == "json":
        _emit(args, json.dumps([p.__dict__ for p in pts]) + "\n")
    else:
        _emit(args, phase.curve_csv(pts))


def cmd_convergence(args):
    names = [s for s in args.solvers.split(",") if s]
    try:
        configs = [_solver(args, Variant(name)) for name in names]
    except ValueError as exc:
        raise UsageError(f"convergence: {exc}")
    if args.paper_scale:
        pc = harness.FULL_CONVERGENCE
        spec = harness.ConvergenceSpec(n=pc["n"], m=pc["m"], k_nonzeros=pc["k_nonzeros"],
                                       trials=args.trials or pc["trials"], decay=pc["decay"],
                                       max_steps=args.max_steps, solvers=configs, base_seed=args.seed,
                                       k0=args.k0, k_floor=args.k_floor)
    else:
        g = _gen(args, 1000)
        spec = harness.ConvergenceSpec(n=g.n, m=g.m, k_nonzeros=g.k_nonzeros, trials=args.trials or 20,
                                       decay=args.decay, max_steps=args.max_steps, solvers=configs,
                                       base_seed=args.seed, k0=args.k0, k_floor=args.k_floor)
    res = harness.convergence_compare(spec, jobs=args.jobs)
    if args.format == "json":
        _emit(args, json.dumps({lab: tr.tolist() for lab, tr in zip(res.labels, res.mean_traces)}) + "\n")
    else:
        _emit(args, res.to_csv())


def cmd_oracle(args):
    inst = make_instance(_gen(args, 12))
    sol = l1_min_lp(inst) if args.method == "lp" else l1_min_enum(inst)
    _emit(args, sol.to_json() + "\n")


def cmd_selftest(args):
    if not selftest.run_all(sys.stderr):
        raise RuntimeError("selftest failed")


COMMANDS = {
    "reconstruct": cmd_reconstruct,
    "phase-diagram": cmd_phase_diagram,
    "threshold-curve": cmd_threshold_curve,
    "convergence": cmd_convergence,
    "oracle": cmd_oracle,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "format", None) and args.command == "reconstruct" and args.format != "json":
            raise UsageError("reconstruct: only --format json is supported")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
