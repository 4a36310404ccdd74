"""Command line entry point: ``gee-lab run`` and ``gee-lab verify``."""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .scenarios import SCENARIOS, ConstraintViolation, ScenarioConfig, run_scenario

EXIT_OK, EXIT_ABORT, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    from .checks import SUITES
    p = argparse.ArgumentParser(prog="gee-lab", description="Evolve and verify the modified GEE system.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario from a JSON config")
    run.add_argument("--config", help="JSON config file (defaults apply when omitted)")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--points", type=int, help="points per active axis")
    run.add_argument("--cfl", type=float)
    run.add_argument("--t-end", type=float, dest="t_end")
    run.add_argument("--steps", type=int, help="fixed step count instead of an end time")
    run.add_argument("--order", type=int, choices=(2, 4), help="stencil order")
    run.add_argument("--strict-constraints", choices=("on", "off"), dest="strict")
    run.add_argument("--output", help="diagnostics CSV path")
    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("suite", choices=("all",) + tuple(SUITES))
    return p


def _config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    over = {}
    if args.scenario is not None:
        over["scenario"] = args.scenario
    if args.points is not None:
        over["points_per_axis"] = args.points
    if args.cfl is not None:
        over["cfl"] = args.cfl
    if args.t_end is not None:
        over["t_end"], over["steps"] = args.t_end, None
    if args.steps is not None:
        over["steps"] = args.steps
    if args.order is not None:
        over["stencil_order"] = args.order
    if args.strict is not None:
        over["strict_constraints"] = args.strict == "on"
    if args.output is not None:
        over["output_path"] = args.output
    return dataclasses.replace(cfg, **over)


def _run(args) -> int:
    try:
        cfg = _config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res, _ = run_scenario(cfg)
    except ConstraintViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    last = res.records[-1]
    norms = ", ".join(f"{k}={v:.3e}" for k, v in last.norms().items())
    print(f"{cfg.scenario}: {res.status} after {res.steps} steps at t = {last.t:.6g}")
    print(f"  {norms}")
    if cfg.output_path:
        print(f"  diagnostics written to {cfg.output_path}")
    if not res.ok:
        print(f"error: {res.message}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _verify(args) -> int:
    from .checks import run_suite
    ok = True
    for r in run_suite(args.suite):
        print(r.line(), flush=True)
        ok &= r.passed
    return EXIT_OK if ok else EXIT_FAILED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return _run(args) if args.command == "run" else _verify(args)


if __name__ == "__main__":
    sys.exit(main())
