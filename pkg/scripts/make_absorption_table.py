#!/usr/bin/env python3
"""Regenerate the packaged synthetic absorption table.

The table approximates humid summer air across 50-500 GHz: a gentle
continuum rising with frequency plus Van Vleck-Weisskopf-like resonance
bumps at the well-known O2 (60, 118.75 GHz) and H2O (183.31, 325.15,
380.2 GHz) line centers. Values are smooth, strictly tabulated on a
uniform grid, and deliberately modest in magnitude; swap in your own
line-by-line data file for quantitative channel studies.
"""
import argparse
from pathlib import Path

import numpy as np

LINES = [
    # (center GHz, peak 1/m, half-width GHz)
    (60.0, 2.0e-3, 5.0),
    (118.75, 6.0e-4, 2.0),
    (183.31, 2.5e-3, 3.0),
    (325.15, 3.0e-3, 4.0),
    (380.20, 8.0e-3, 5.0),
]


def absorption_coefficient(f_ghz: np.ndarray) -> np.ndarray:
    k = 8.0e-5 * (f_ghz / 200.0) ** 1.8  # continuum
    for center, peak, width in LINES:
        k = k + peak * width**2 / ((f_ghz - center) ** 2 + width**2)
    return k


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parent.parent
        / "src/mmwave_tdoa/data/standard_air_50_500ghz.csv",
    )
    parser.add_argument("--f-min-ghz", type=float, default=50.0)
    parser.add_argument("--f-max-ghz", type=float, default=500.0)
    parser.add_argument("--points", type=int, default=451)
    args = parser.parse_args()

    f_ghz = np.linspace(args.f_min_ghz, args.f_max_ghz, args.points)
    k = absorption_coefficient(f_ghz)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as handle:
        handle.write("frequency_hz,k_per_m\n")
        for f, value in zip(f_ghz, k):
            handle.write(f"{f * 1e9:.6e},{value:.6e}\n")
    print(f"wrote {args.out} ({args.points} rows, k in [{k.min():.2e}, {k.max():.2e}] 1/m)")


if __name__ == "__main__":
    main()
