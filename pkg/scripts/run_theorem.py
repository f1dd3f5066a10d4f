#!/usr/bin/env python3
"""Batch entry-into-low-inertia experiment at configurable levels.

Examples:
    python scripts/run_theorem.py --count 50 --seed 3
    python scripts/run_theorem.py --level 17.2816 --count 100 --out rep.json
    python scripts/run_theorem.py --config scenario.json
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lunarbound.bounds import compute_chain
from lunarbound.core import MassParams
from lunarbound.harness import (
    APPENDIX_H,
    APPENDIX_J,
    APPENDIX_MASSES,
    ScenarioConfig,
    run_theorem_experiment,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", type=Path, default=None)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--level", type=float, default=None,
                    help="inertia level (default: the chain's certified strip level R)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    if args.config:
        cfg = ScenarioConfig.from_json(args.config.read_text())
    else:
        bs = compute_chain(MassParams(*APPENDIX_MASSES), APPENDIX_H, APPENDIX_J)
        level = args.level if args.level is not None else bs.R
        cfg = ScenarioConfig(
            masses=APPENDIX_MASSES, H=APPENDIX_H, J=(0, 0, APPENDIX_J),
            count=args.count, seed=args.seed, level=level, jobs=args.jobs,
        )
    rep = run_theorem_experiment(cfg)
    agg = rep.aggregate
    print(f"level {rep.level:.6g}, budget {rep.time_budget:.6g}: "
          f"{agg['passed']}/{agg['count']} entered, "
          f"{agg['budget_exhausted']} budget-exhausted "
          f"(wall {rep.wall_clock_s:.1f}s)")
    if args.out:
        args.out.write_text(rep.to_json() + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
