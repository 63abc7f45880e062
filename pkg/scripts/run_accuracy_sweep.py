#!/usr/bin/env python3
"""Run the localization accuracy sweep and print a plot-ready table.

Columns: resolution cells (or sampling rate), AEDE, and the estimation
time spent per sweep point. Defaults to the desk-scale profile; pass
--config configs/full_sweep.json for the long-running 500-run version.
"""
import argparse
import sys
from pathlib import Path

from mmwave_tdoa import ExperimentConfig
from mmwave_tdoa.harness import sweep_report, write_rows_csv, write_trials_csv

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", type=Path, default=REPO / "configs/desk_sweep.json")
    parser.add_argument("--out", type=Path, default=REPO / "out")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, seed=args.seed)

    rows, trials = sweep_report(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    write_trials_csv(trials, args.out / "trials.csv")
    write_rows_csv(rows, args.out / "sweep.csv")

    print(f"{'point':>22}  {'AEDE [mm]':>10}  {'est. time [s]':>13}")
    for row in rows:
        if row["estimator"] == "ctma":
            label = f"bank alpha={row['alpha']}"
        else:
            label = f"sampling {row['f_s_hz'] / 1e9:.0f} GHz"
        print(f"{label:>22}  {row['aede_m'] * 1e3:>10.4f}  {row['runtime_s']:>13.2f}")
    print(f"\nwrote {args.out / 'trials.csv'} and {args.out / 'sweep.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
