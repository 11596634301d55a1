"""Run the sweep specs in scripts/specs and print the median curves.

    python scripts/run_sweeps.py                 # every spec, output in results/
    python scripts/run_sweeps.py power distance --jobs 4 --trials 5
"""
import argparse
from pathlib import Path

from starisac.ao import fmt
from starisac.harness import parse_sweep_spec, run_sweep

SPECS = Path(__file__).parent / "specs"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="spec names without .ini (default: all)")
    ap.add_argument("--out", default="results", help="parent output directory")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--trials", type=int, help="override the trial count")
    args = ap.parse_args()
    names = args.names or sorted(p.stem for p in SPECS.glob("*.ini"))
    for name in names:
        spec = parse_sweep_spec((SPECS / f"{name}.ini").read_text())
        if args.trials:
            spec.trials = args.trials
        spec.out = Path(args.out) / name
        outcome = run_sweep(spec, jobs=args.jobs)
        print(f"== {name} ({spec.parameter}), {len(outcome.failures)} trials not ok")
        for mode in [c.label for c in spec.modes]:
            row = " ".join(fmt(round(v, 4)) for v in outcome.medians(mode))
            print(f"  {mode:<8} {row}")
        print(f"  written to {spec.out}")


if __name__ == "__main__":
    main()
