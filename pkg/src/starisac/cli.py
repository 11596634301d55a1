"""Command line front end: ``run``, ``sweep`` and ``selftest``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .ao import fmt, write_trace
from .harness import parse_sweep_spec, run_sweep, run_trial
from .metrics import check_feasibility
from .scenario import ConfigError, Mode, desk_scenario, load
from .selftest import run_selftest


def _cmd_run(args: argparse.Namespace) -> int:
    sc = load(args.config) if args.config else desk_scenario()
    changes = {}
    if args.mode:
        changes["mode"] = Mode.parse(args.mode)
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        sc = sc.replace(**changes)
    trace, ch = run_trial(sc, sc.seed)
    if args.trace:
        write_trace(trace, args.trace)
    rep = check_feasibility(trace.bf, trace.star, sc, ch)
    print(f"mode {sc.mode.value}  seed {sc.seed}")
    print(f"iterations {trace.iterations}  converged {int(trace.converged)}")
    print(f"sum_rate_bps_hz {fmt(trace.final_sum_rate)}")
    if trace.records:
        print(f"radar_snr {fmt(trace.records[-1].radar_snr)}")
    for name, v in rep.relative.items():
        print(f"slack_{name} {fmt(v)}")
    for msg in trace.messages:
        print(f"note: {msg}")
    problems = []
    if trace.failed:
        problems.append("a subproblem failed")
    if not rep.feasible:
        problems.append("infeasible: " + ", ".join(rep.violated()))
    if problems:
        print("error: " + "; ".join(problems), file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = parse_sweep_spec(Path(args.spec).read_text())
    spec.out = Path(args.out)
    outcome = run_sweep(spec, jobs=args.jobs)
    for s in outcome.summary:
        print(f"{spec.parameter}={fmt(s.value)}  {s.mode:<8} median {fmt(s.median)}  "
              f"[{fmt(s.q25)}, {fmt(s.q75)}]  n={s.trials_ok}")
    bad = outcome.failures
    if bad:
        print(f"error: {len(bad)} trial(s) failed; see {spec.out / 'results.csv'}", file=sys.stderr)
        return 1
    return 0


def _cmd_selftest(args: argparse.Namespace) -> int:
    return 0 if run_selftest(seed=args.seed) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starisac", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="single alternating-optimization run")
    r.add_argument("--config", help="scenario document ([scenario] section); desk defaults if omitted")
    r.add_argument("--mode", help="UED, EED, SD or PASSIVE (overrides the config)")
    r.add_argument("--seed", type=int, help="trial seed (overrides the config)")
    r.add_argument("--trace", help="write the per-iteration trace CSV here")
    r.set_defaults(func=_cmd_run)
    s = sub.add_parser("sweep", help="Monte-Carlo sweep from a spec file")
    s.add_argument("--spec", required=True, help="sweep spec document ([sweep], optional [scenario])")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.set_defaults(func=_cmd_sweep)
    t = sub.add_parser("selftest", help="run the built-in oracle checks")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
