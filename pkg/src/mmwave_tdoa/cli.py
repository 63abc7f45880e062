"""Command line front end.

Subcommands:
  simulate-toa     TOA-versus-resolution data for one node position
  simulate-tdoa    full localization Monte Carlo (trials.csv, summary.json)
  sweep            localization accuracy per sweep point (adds sweep.csv)
  validate-config  check a config and report derived quantities

Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, SimulationError
from .harness import (
    ExperimentConfig,
    prepare,
    run_experiment,
    sweep_report,
    toa_sweep,
    write_rows_csv,
    write_summary_json,
    write_trials_csv,
)


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the root seed")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument(
        "--estimator",
        choices=("ctma", "sampling", "both"),
        help="which estimator family to run",
    )
    parser.add_argument("--no-noise", action="store_true", help="disable channel noise")
    parser.add_argument(
        "--dump-traces",
        action="store_true",
        help="write the first trial's received traces under <out>/traces/",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwave-tdoa",
        description="Sampling-free TDOA localization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate-toa", "single-position TOA estimates versus resolution"),
        ("simulate-tdoa", "full localization Monte Carlo"),
        ("sweep", "accuracy sweep over delay-bank sizes and sampling rates"),
        ("validate-config", "validate a config without running"),
    ):
        _add_common_arguments(sub.add_parser(name, help=text))
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.estimator is not None:
        overrides["estimator"] = args.estimator
    if args.no_noise:
        overrides["noise"] = False
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "validate-config":
            prep = prepare(cfg)
            print("config OK")
            print(f"  pulse duration t_p = {prep.t_p:.4e} s")
            for bank in prep.banks:
                print(
                    f"  bank M={bank.branches} Q={bank.stages}: alpha={bank.alpha}, "
                    f"resolution={bank.resolution:.4e} s"
                )
            for f_s in prep.sampling_rates:
                print(f"  sampling rate {f_s:.4e} Hz")
            return 0

        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()

        if args.command == "simulate-toa":
            rows = toa_sweep(cfg)
            write_rows_csv(rows, out / "toa_vs_alpha.csv")
            print(f"wrote {out / 'toa_vs_alpha.csv'} ({len(rows)} rows)")
        elif args.command == "simulate-tdoa":
            dump_dir = out / "traces" if args.dump_traces else None
            trials, summary, _ = run_experiment(cfg, dump_dir=dump_dir)
            write_trials_csv(trials, out / "trials.csv")
            write_summary_json(summary, out / "summary.json")
            _write_meta(out, time.perf_counter() - started)
            for row in summary["results"]:
                print(_format_row(row))
        elif args.command == "sweep":
            dump_dir = out / "traces" if args.dump_traces else None
            rows, trials = sweep_report(cfg, dump_dir=dump_dir)
            write_trials_csv(trials, out / "trials.csv")
            write_summary_json(
                {"config": cfg.to_dict(), "results": [_strip_runtime(r) for r in rows]},
                out / "summary.json",
            )
            write_rows_csv(rows, out / "sweep.csv")
            _write_meta(out, time.perf_counter() - started)
            for row in rows:
                print(_format_row(row))
        return 0
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 3


def _strip_runtime(row: dict) -> dict:
    return {k: v for k, v in row.items() if k != "runtime_s"}


def _write_meta(out: Path, wall_time: float) -> None:
    # Wall time lives outside summary.json so identical runs stay byte-identical.
    with open(out / "run_meta.json", "w") as handle:
        json.dump({"wall_time_s": wall_time}, handle, indent=2)
        handle.write("\n")


def _format_row(row: dict) -> str:
    if row["estimator"] == "ctma":
        label = f"ctma   alpha={row['alpha']:>6}"
    else:
        label = f"sampling fs={row['f_s_hz']:.3e}"
    text = f"{label}  AEDE = {row['aede_m']:.4e} m  ({row['n_trials']} trials"
    if "runtime_s" in row:
        text += f", {row['runtime_s']:.2f} s estimation"
    return text + ")"


if __name__ == "__main__":
    sys.exit(main())
