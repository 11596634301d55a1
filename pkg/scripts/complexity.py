"""Per-iteration wall time against N, split by block, with a log-log fit.

    python scripts/complexity.py --N 8 16 32 64 128 --trials 3 --mode UED
"""
import argparse

import numpy as np

from starisac.ao import BLOCKS
from starisac.harness import derive_seed, run_trial
from starisac.scenario import Mode, desk_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--mode", default="UED")
    args = ap.parse_args()
    med = []
    print("N " + " ".join(f"{b}_ms" for b in BLOCKS) + " total_ms")
    for N in args.N:
        sc = desk_scenario(N=N, mode=Mode.parse(args.mode))
        blocks = {b: [] for b in BLOCKS}
        for t in range(args.trials):
            tr, _ = run_trial(sc, derive_seed(0, 0, t))
            for r in tr.records:
                for b in BLOCKS:
                    blocks[b].append(r.block_time[b])
        per = {b: 1e3 * float(np.median(v)) for b, v in blocks.items()}
        total = sum(per.values())
        med.append(total)
        print(f"{N} " + " ".join(f"{per[b]:.3f}" for b in BLOCKS) + f" {total:.3f}")
    if len(args.N) > 1:
        slope = np.polyfit(np.log(args.N), np.log(med), 1)[0]
        tail = np.polyfit(np.log(args.N[-2:]), np.log(med[-2:]), 1)[0]
        print(f"log-log slope over all N {slope:.2f}; between the two largest N {tail:.2f}")


if __name__ == "__main__":
    main()
