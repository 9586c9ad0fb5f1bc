"""Relation counts and verification for n = 2..4 over a range of radii.

    python scripts/census_growth.py --max-k 5 --out results/census.json
"""

import argparse
import json
import time
from pathlib import Path

from dispbound.relations import (
    a_coefficients,
    enumerate_relations,
    r_k_sum_over_cancellations,
    r_k_sum_over_lengths,
    relation_count,
    verify_relation,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-k", type=int, default=4)
    ap.add_argument("--enumerate-up-to", type=int, default=2000,
                    help="enumerate and verify censuses with at most this many relations")
    ap.add_argument("--out", type=Path, default=Path("results/census.json"))
    args = ap.parse_args()

    rows = []
    for n in (2, 3, 4):
        for k in range(2, args.max_k + 1):
            row = {
                "n": n, "k": k,
                "R_k": relation_count(n, k),
                "formulas_agree": r_k_sum_over_cancellations(n, k) == r_k_sum_over_lengths(n, k),
                "a_j": a_coefficients(n, k),
            }
            if row["R_k"] <= args.enumerate_up_to:
                t0 = time.perf_counter()
                census = enumerate_relations(n, k)
                row["enumerated"] = census.total
                row["verified"] = sum(verify_relation(r) for r in census.relations)
                row["seconds"] = round(time.perf_counter() - t0, 3)
            rows.append(row)
            print(row)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
