#!/usr/bin/env python3
"""Deviation/sandwich verification batch at the equal-mass reference levels.

Usage: python scripts/run_sandwich.py [--count N] [--seed S] [--out report.json]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lunarbound.harness import (
    APPENDIX_H,
    APPENDIX_J,
    APPENDIX_MASSES,
    ScenarioConfig,
    canonical_json,
    run_sandwich_experiment,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    cfg = ScenarioConfig(
        masses=APPENDIX_MASSES, H=APPENDIX_H, J=(0, 0, APPENDIX_J),
        count=args.count, seed=args.seed,
    )
    rep = run_sandwich_experiment(cfg)
    agg = rep["aggregate"]
    print(f"I_bar = {rep['I_bar']:.6g}, eps = {rep['epsilon']:.6g}, "
          f"horizon = {rep['time_horizon']:.6g}")
    print(f"{agg['ok']}/{agg['count']} samples clean, "
          f"{agg['violations']} bound violations, worst deviation fraction "
          f"{agg['worst_deviation_fraction']:.3e}")
    if args.out:
        args.out.write_text(canonical_json(rep) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
