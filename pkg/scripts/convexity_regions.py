"""PD scans of the two-variable Hessians and a look at the det H_f = 0 curve.

Prints where det H_f vanishes next to the curve x + xy + y = 3/4, showing that
the latter lies strictly inside {det H_f > 0}.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from dispbound.convexity import CF, CG, det_hessian_f, f_det_zero_x, pd_scan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", type=Path, default=Path("results/convexity.json"))
    args = ap.parse_args()

    reports = {r.kind: pd_scan(r, args.samples, args.seed).to_dict() for r in (CF, CG)}
    for kind, rep in reports.items():
        print(kind, rep["inside"], "outside not PD:", rep["outside"]["not_pd"], "/", rep["outside"]["samples"])

    curve = []
    for y in np.linspace(0.05, 0.7, 14):
        x_zero = f_det_zero_x(y)
        x_listed = (0.75 - y) / (1 + y)
        curve.append({"y": y, "x_det_zero": x_zero, "x_on_xy_curve": x_listed,
                      "det_on_xy_curve": det_hessian_f(x_listed, y)})
        print(f"y={y:.3f}  det=0 at x={x_zero:.4f}  x+xy+y=3/4 at x={x_listed:.4f}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps({"pd": reports, "f_curves": curve}, indent=2))


if __name__ == "__main__":
    main()
