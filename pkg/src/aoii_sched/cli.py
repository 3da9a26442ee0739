"""Command-line front end: scenario sweeps, verification suites, index tables.

Exit status: 0 success, 1 validation error, 2 property failure, 3 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .core import SourceParams
from .experiment import ScenarioError, index_rows, load_scenario, run_scenario, to_csv, write_metadata
from .verification import SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_PROPERTY, EXIT_RUNTIME = 0, 1, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="aoii-sched", description=__doc__.splitlines()[0])
    mode = ap.add_mutually_exclusive_group(required=True)
    mode.add_argument("--scenario", metavar="PATH|NAME",
                      help="scenario file or built-in name (paper-scenario-1, paper-scenario-2)")
    mode.add_argument("--verify", metavar="SUITE", choices=sorted(SUITES) + ["all"],
                      help="run a closed-form/solver property suite")
    mode.add_argument("--index-table", action="store_true", help="print Whittle indices for one user")
    ap.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    ap.add_argument("--seed", type=int, help="override the scenario's master seed (u64)")
    ap.add_argument("--replications", type=int, help="override the replication count")
    ap.add_argument("--horizon", type=int, help="override the horizon T")
    ap.add_argument("--sweep", help="override the N sweep, e.g. '4,8'")
    ap.add_argument("--p", type=float, help="source jump probability (index table)")
    ap.add_argument("--d", type=float, help="state spacing (index table)")
    ap.add_argument("--rho", type=float, help="channel success probability (index table)")
    ap.add_argument("--n-max", type=int, default=10, help="largest state index in the table")
    return ap


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _scenario(args):
    sc = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
        if sc.warmup is not None and sc.warmup >= args.horizon:
            overrides["warmup"] = None
    if args.sweep is not None:
        try:
            overrides["sweep"] = tuple(int(x) for x in args.sweep.replace(",", " ").split())
        except ValueError:
            raise ScenarioError(f"--sweep: cannot parse {args.sweep!r}") from None
    sc = replace(sc, **overrides).validate()
    rows = run_scenario(sc)
    _emit(to_csv(rows), args.out)
    if args.out is not None:
        write_metadata(sc, args.out.with_name(args.out.name + ".meta.json"))
    return EXIT_OK


def _verify(args):
    failed = False
    for check in run_suite(args.verify):
        print(check.line())
        failed |= not check.passed
    return EXIT_PROPERTY if failed else EXIT_OK


def _index_table(args):
    missing = [f"--{k}" for k in ("p", "d", "rho") if getattr(args, k) is None]
    if missing:
        raise ScenarioError(f"--index-table needs {', '.join(missing)}")
    try:
        params = SourceParams(p=args.p, d=args.d, rho=args.rho)
        rows = index_rows(params, args.n_max)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    _emit(to_csv(rows, header=("n", "W_aoi", "W_aoii")), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verify:
            return _verify(args)
        if args.index_table:
            return _index_table(args)
        return _scenario(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
