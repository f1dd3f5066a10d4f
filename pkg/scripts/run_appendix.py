#!/usr/bin/env python3
"""Run the equal-mass reference scenario and print the constant table.

Usage: python scripts/run_appendix.py [--count N] [--seed S] [--out report.json]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lunarbound.harness import canonical_json, run_appendix_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    rep = run_appendix_scenario(count=args.count, seed=args.seed)
    bs = rep["bound_set"]
    print("equal-mass reference case: m_i = 1/3, H = -1/6, |J| = sqrt(8)/9")
    for key in ("c_r", "c_J2", "c_g", "c_g2", "rho_min", "I_star", "I_star_eff",
                "I_star2", "A", "a", "b", "A1", "B1", "R_bar", "R",
                "lambda", "lambda_prime", "R_bar_lambda", "R_lambda", "I0"):
        print(f"  {key:14s} = {bs[key]:.12g}")
    print(f"  delta          = {bs['marchal']['delta']:.12g}")
    print(f"  rho_M          = {bs['marchal']['rho_M']:.12g}")
    print(f"  I_M            = {bs['marchal']['I_M']:.12g}")
    print(f"checks: I* = 32/27: {rep['checks']['I_star_ok']}, I** < I_M: "
          f"{rep['checks']['ordering_I_star2_lt_I_M']}")
    agg = rep["experiment"]["aggregate"]
    print(f"experiment at level {rep['experiment_level']:.6g}: "
          f"{agg['passed']}/{agg['count']} entered")
    if args.out:
        args.out.write_text(canonical_json(rep) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
