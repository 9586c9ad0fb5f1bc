"""Displacement margins on Schottky pairs as the disks shrink.

    python scripts/schottky_margins.py --k 2 3 --trials 100 --factors 0.9 0.5 0.09
"""

import argparse
import json
import time
from pathlib import Path

from dispbound.hyperbolic import SchottkyConfig, TrialConfig, run_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--base-points", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--factors", type=float, nargs="+", default=[0.9, 0.5, 0.09])
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/schottky.json"))
    args = ap.parse_args()

    summary = []
    for k in args.k:
        for f in args.factors:
            t0 = time.perf_counter()
            cfg = TrialConfig(k=k, trials=args.trials, seed=args.seed, base_points=args.base_points,
                              infimum=True, threads=args.threads,
                              schottky=SchottkyConfig(margin_factor=f))
            out = run_trials(cfg)
            inf_rows = [r for r in out["rows"] if r["kind"] == "infimum"]
            rec = {
                "k": k, "margin_factor": f, "bound": out["bound"],
                "min_margin": out["min_margin"],
                "min_infimum_D": min(r["D"] for r in inf_rows),
                "violations": out["violations"],
                "seconds": round(time.perf_counter() - t0, 2),
            }
            summary.append(rec)
            print(rec)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
