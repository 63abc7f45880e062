"""Monte Carlo experiment runner: end-to-end localization accuracy.

One experiment draws node positions uniformly in an L x L deployment,
synthesizes a pulse, propagates it to the three receivers with independent
noise, estimates the three TOAs with every configured estimator, solves
for the position, and records one TrialResult per estimator per trial.
Everything is deterministic given the root seed: per-trace noise seeds are
derived from (root, position, run, receiver), so no two traces share a
noise stream and results do not depend on evaluation order.
"""
from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import (
    C0,
    AbsorptionTable,
    ChannelSpec,
    ingest_absorption,
    noise_variance,
    propagate,
    transmit_psd,
)
from .detector import (
    DetectorBankConfig,
    ctma_output,
    iterative_toa,
    lpf_approximation,
    pulse_start_from_toa,
    sampling_toa,
)
from .errors import ConfigurationError
from .locate import BsLayout, ToaTriplet, solve_position, tdoa_ranges
from .pulse import DEFAULT_STEP, PulseSpec, effective_duration, generate_pulse
from .trace import SignalTrace, dump_csv

TOA_MODES = ("peak", "start-corrected")
R1_MODES = ("known-clock", "quadratic")
ESTIMATORS = ("ctma", "sampling", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; mirrors the JSON config file 1:1."""

    layout_size: float = 2.0
    pulse_order: int = 2
    pulse_center_frequency: float = 200e9
    pulse_power: float = 1e-6
    energy_fraction: float = 0.9999
    band: tuple[float, float] = (100e9, 300e9)
    absorption_path: str | None = None  # None selects the packaged table
    species_fractions: dict | None = None
    mq_pairs: tuple[tuple[int, int], ...] = ((2, 11),)
    sampling_rates: tuple[float, ...] = (600e9,)
    estimator: str = "both"
    n_positions: int = 10
    n_runs: int = 500
    seed: int = 1
    t_ob: float = 10e-9
    step: float = DEFAULT_STEP
    temperature: float = 296.0
    toa_mode: str = "peak"
    r1_mode: str = "known-clock"
    noise: bool = True
    guard_radius: float = 0.01
    toa_position: tuple[float, float] = (0.5, 0.75)

    def __post_init__(self):
        if not (self.layout_size > 0.0):
            raise ConfigurationError("layout size must be positive")
        diag = self.layout_size * math.sqrt(2.0)
        if not (self.t_ob > diag / C0):
            raise ConfigurationError(
                f"t_ob = {self.t_ob:.3e} s must exceed the layout diagonal "
                f"delay {diag / C0:.3e} s"
            )
        if self.n_positions < 1 or self.n_runs < 1:
            raise ConfigurationError("need at least one position and one run")
        if self.toa_mode not in TOA_MODES:
            raise ConfigurationError(f"toa_mode must be one of {TOA_MODES}")
        if self.r1_mode not in R1_MODES:
            raise ConfigurationError(f"r1_mode must be one of {R1_MODES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        if not self.mq_pairs and not self.sampling_rates:
            raise ConfigurationError("no estimator configured: both sweep axes empty")
        for pair in self.mq_pairs:
            if len(pair) != 2:
                raise ConfigurationError("mq_pairs entries must be (branches, stages)")
        object.__setattr__(self, "band", tuple(float(f) for f in self.band))
        object.__setattr__(
            self, "mq_pairs", tuple((int(m), int(q)) for m, q in self.mq_pairs)
        )
        object.__setattr__(
            self, "sampling_rates", tuple(float(f) for f in self.sampling_rates)
        )
        object.__setattr__(self, "toa_position", tuple(float(v) for v in self.toa_position))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["band"] = list(self.band)
        out["mq_pairs"] = [list(p) for p in self.mq_pairs]
        out["sampling_rates"] = list(self.sampling_rates)
        out["toa_position"] = list(self.toa_position)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class TrialResult:
    """One localization attempt by one estimator."""

    estimator: str  # "ctma" or "sampling"
    alpha: int | None  # branches ** (stages + 1) for ctma rows
    f_s: float | None  # sampling rate for sampling rows
    position_index: int
    run_index: int
    true_x: float
    true_y: float
    est_x: float
    est_y: float
    tau1: float
    tau2: float
    tau3: float
    error: float

    @property
    def tag(self) -> str:
        if self.estimator == "ctma":
            return f"ctma@alpha={self.alpha}"
        return f"sampling@fs={self.f_s:g}"


def default_absorption_path() -> str:
    from importlib.resources import files

    return str(files("mmwave_tdoa").joinpath("data/standard_air_50_500ghz.csv"))


@dataclass(frozen=True)
class PreparedExperiment:
    config: ExperimentConfig
    table: AbsorptionTable
    tx: SignalTrace
    t_p: float
    layout: BsLayout
    banks: tuple[DetectorBankConfig, ...]
    sampling_rates: tuple[float, ...]
    positions: tuple[tuple[float, float], ...]
    ctma_offset: float
    lpf_offset: float


def prepare(cfg: ExperimentConfig) -> PreparedExperiment:
    """Validate everything that can fail, before any trial runs."""
    path = cfg.absorption_path or default_absorption_path()
    table = ingest_absorption(path, cfg.species_fractions)
    if not table.covers(cfg.band):
        raise ConfigurationError(
            f"absorption table {path} does not cover the band {cfg.band}"
        )
    spec = PulseSpec(
        order=cfg.pulse_order,
        center_frequency=cfg.pulse_center_frequency,
        power=cfg.pulse_power,
        energy_fraction_for_duration=cfg.energy_fraction,
    )
    tx = generate_pulse(spec, cfg.step)
    t_p = effective_duration(tx, cfg.energy_fraction)

    diag = cfg.layout_size * math.sqrt(2.0)
    required = diag / C0 + tx.end_time
    if cfg.t_ob < required:
        raise ConfigurationError(
            f"t_ob = {cfg.t_ob:.3e} s cannot contain the pulse at the far corner; "
            f"need at least {required:.3e} s"
        )

    use_ctma = cfg.estimator in ("ctma", "both")
    use_sampling = cfg.estimator in ("sampling", "both")
    banks = tuple(
        DetectorBankConfig(branches=m, stages=q, t_ob=cfg.t_ob, t_p=t_p)
        for m, q in (cfg.mq_pairs if use_ctma else ())
    )
    for bank in banks:
        if bank.resolution < 4.0 * cfg.step:
            raise ConfigurationError(
                f"M={bank.branches} Q={bank.stages}: resolution {bank.resolution:.3e} s "
                f"is below 4 grid steps ({4.0 * cfg.step:.3e} s)"
            )
    rates = tuple(cfg.sampling_rates) if use_sampling else ()
    for f_s in rates:
        if f_s > 1.0 / cfg.step:
            raise ConfigurationError(
                f"sampling rate {f_s:.3e} Hz exceeds the grid rate {1.0 / cfg.step:.3e} Hz"
            )
    if not banks and not rates:
        raise ConfigurationError(f"estimator {cfg.estimator!r} has no configured sweep points")

    positions = _draw_positions(cfg)
    ctma_offset, lpf_offset = _estimator_offsets(tx, t_p)
    return PreparedExperiment(
        config=cfg,
        table=table,
        tx=tx,
        t_p=t_p,
        layout=BsLayout.corner(cfg.layout_size),
        banks=banks,
        sampling_rates=rates,
        positions=positions,
        ctma_offset=ctma_offset,
        lpf_offset=lpf_offset,
    )


def _draw_positions(cfg: ExperimentConfig) -> tuple[tuple[float, float], ...]:
    """Uniform over the open square, outside a guard ring around each receiver."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x9E33]))
    anchors = BsLayout.corner(cfg.layout_size).positions()
    out = []
    while len(out) < cfg.n_positions:
        x, y = rng.uniform(0.0, cfg.layout_size, size=2)
        if np.all(np.hypot(anchors[:, 0] - x, anchors[:, 1] - y) > cfg.guard_radius):
            out.append((float(x), float(y)))
    return tuple(out)


def _estimator_offsets(tx: SignalTrace, t_p: float) -> tuple[float, float]:
    """Systematic peak delays of each estimator on the clean pulse.

    Both detectors peak after the pulse's own time origin (by about half
    the duration for the windowed integral, more for the low-pass form);
    these calibrated offsets anchor the reference absolute range, while
    the TOA differences cancel them on their own.
    """
    pad = int(round(4.0 * t_p / tx.step))
    samples = np.concatenate([np.zeros(pad), tx.samples, np.zeros(pad)])
    cal = SignalTrace(
        start_time=tx.start_time - pad * tx.step, step=tx.step, samples=samples
    )
    _, ctma_peak = ctma_output(cal, t_p, (cal.start_time + t_p, cal.end_time))
    filtered = lpf_approximation(cal, t_p)
    lpf_peak = filtered.times()[int(np.argmax(filtered.samples))]
    return float(ctma_peak), float(lpf_peak)


def _trace_seed(root: int, position: int, run: int, receiver: int):
    """Noise seed derivation rule; distinct per (root, position, run, receiver)."""
    return np.random.SeedSequence([root, position, run, receiver])


def run_experiment(cfg: ExperimentConfig, dump_dir=None):
    """Run the full Monte Carlo and return (trials, summary, timings).

    timings maps each estimator tag to the wall time spent estimating and
    localizing for it (shared propagation time is excluded).
    """
    prep = prepare(cfg)
    cfg_echo = cfg.to_dict()
    trials: list[TrialResult] = []
    timings: dict[str, float] = {}

    anchors = prep.layout.positions()
    psd = transmit_psd(prep.tx, cfg.band, cfg.pulse_power) if cfg.noise else None
    for p_idx, (x, y) in enumerate(prep.positions):
        dists = np.hypot(anchors[:, 0] - x, anchors[:, 1] - y)
        chspecs = [
            ChannelSpec(
                distance=float(d),
                center_frequency=cfg.pulse_center_frequency,
                band=cfg.band,
                temperature=cfg.temperature,
            )
            for d in dists
        ]
        if cfg.noise:
            powers = [noise_variance(s, prep.table, psd) for s in chspecs]
        else:
            powers = [0.0, 0.0, 0.0]

        for r_idx in range(cfg.n_runs):
            traces = [
                propagate(
                    prep.tx,
                    chspecs[b],
                    prep.table,
                    seed=_trace_seed(cfg.seed, p_idx, r_idx, b),
                    emit_time=0.0,
                    window=cfg.t_ob,
                    noise_power=powers[b],
                )
                for b in range(3)
            ]
            if dump_dir is not None and p_idx == 0 and r_idx == 0:
                _dump_traces(traces, dump_dir)

            for bank in prep.banks:
                start = time.perf_counter()
                taus = [iterative_toa(traces[b], bank).tau for b in range(3)]
                trial = _localize(
                    prep, taus, prep.ctma_offset, "ctma", bank.alpha, None, p_idx, r_idx, x, y
                )
                key = trial.tag
                timings[key] = timings.get(key, 0.0) + time.perf_counter() - start
                trials.append(trial)
            for f_s in prep.sampling_rates:
                start = time.perf_counter()
                taus = [sampling_toa(traces[b], prep.t_p, f_s) for b in range(3)]
                trial = _localize(
                    prep, taus, prep.lpf_offset, "sampling", None, f_s, p_idx, r_idx, x, y
                )
                key = trial.tag
                timings[key] = timings.get(key, 0.0) + time.perf_counter() - start
                trials.append(trial)

    summary = {"config": cfg_echo, "results": summarize(trials)}
    return trials, summary, timings


def _localize(prep, taus, offset, estimator, alpha, f_s, p_idx, r_idx, x, y) -> TrialResult:
    cfg = prep.config
    if cfg.toa_mode == "start-corrected":
        taus = [pulse_start_from_toa(t, prep.t_p) for t in taus]
        offset = offset - prep.t_p
    triplet = ToaTriplet(
        tau1=taus[0], tau2=taus[1], tau3=taus[2], common_offset_correction=offset
    )
    ranges = tdoa_ranges(triplet)
    est_x, est_y = solve_position(
        prep.layout,
        ranges,
        r1_mode=cfg.r1_mode,
        area=(cfg.layout_size, cfg.layout_size),
    )
    return TrialResult(
        estimator=estimator,
        alpha=alpha,
        f_s=f_s,
        position_index=p_idx,
        run_index=r_idx,
        true_x=x,
        true_y=y,
        est_x=est_x,
        est_y=est_y,
        tau1=taus[0],
        tau2=taus[1],
        tau3=taus[2],
        error=math.hypot(est_x - x, est_y - y),
    )


def _dump_traces(traces, dump_dir):
    import os

    os.makedirs(dump_dir, exist_ok=True)
    for b, trace in enumerate(traces):
        dump_csv(trace, os.path.join(dump_dir, f"pos000_run000_bs{b + 1}.csv"))


def aede(trials) -> float:
    """Average Euclidean distance error: mean over positions of the
    per-position mean over runs. Requires one homogeneous estimator group
    with every (position, run) cell present exactly once."""
    trials = list(trials)
    if not trials:
        raise ConfigurationError("cannot average an empty trial collection")
    tags = {t.tag for t in trials}
    if len(tags) > 1:
        raise ConfigurationError(f"mixed estimator groups in one average: {sorted(tags)}")
    cells: dict[int, dict[int, float]] = {}
    for t in trials:
        runs = cells.setdefault(t.position_index, {})
        if t.run_index in runs:
            raise ConfigurationError(
                f"duplicate trial for position {t.position_index}, run {t.run_index}"
            )
        runs[t.run_index] = t.error
    per_position = [float(np.mean(list(runs.values()))) for runs in cells.values()]
    return float(np.mean(per_position))


def summarize(trials) -> list[dict]:
    """Per-sweep-point AEDE rows, ctma points first in ascending alpha,
    then sampling points in ascending rate."""
    groups: dict[tuple, list[TrialResult]] = {}
    for t in trials:
        groups.setdefault((t.estimator, t.alpha, t.f_s), []).append(t)

    def order(key):
        estimator, alpha, f_s = key
        return (0, alpha or 0, 0.0) if estimator == "ctma" else (1, 0, f_s or 0.0)

    rows = []
    for key in sorted(groups, key=order):
        estimator, alpha, f_s = key
        rows.append(
            {
                "estimator": estimator,
                "alpha": alpha,
                "f_s_hz": f_s,
                "aede_m": aede(groups[key]),
                "n_trials": len(groups[key]),
            }
        )
    return rows


def sweep_report(cfg: ExperimentConfig, dump_dir=None):
    """Run the sweep and return (rows, trials); rows add estimation runtime
    per sweep point to the summary columns."""
    trials, summary, timings = run_experiment(cfg, dump_dir=dump_dir)
    rows = []
    for row in summary["results"]:
        tag = (
            f"ctma@alpha={row['alpha']}"
            if row["estimator"] == "ctma"
            else f"sampling@fs={row['f_s_hz']:g}"
        )
        rows.append({**row, "runtime_s": timings.get(tag, 0.0)})
    return rows, trials


def toa_sweep(cfg: ExperimentConfig):
    """Per-run TOA estimates versus alpha for a single node position."""
    prep = prepare(cfg)
    x, y = cfg.toa_position
    if not (0.0 <= x <= cfg.layout_size and 0.0 <= y <= cfg.layout_size):
        raise ConfigurationError("toa_position must lie inside the deployment area")
    anchors = prep.layout.positions()
    dists = np.hypot(anchors[:, 0] - x, anchors[:, 1] - y)
    chspecs = [
        ChannelSpec(float(d), cfg.pulse_center_frequency, cfg.band, cfg.temperature)
        for d in dists
    ]
    if cfg.noise:
        psd = transmit_psd(prep.tx, cfg.band, cfg.pulse_power)
        powers = [noise_variance(s, prep.table, psd) for s in chspecs]
    else:
        powers = [0.0, 0.0, 0.0]

    rows = []
    for r_idx in range(cfg.n_runs):
        traces = [
            propagate(
                prep.tx,
                chspecs[b],
                prep.table,
                seed=_trace_seed(cfg.seed, 0, r_idx, b),
                emit_time=0.0,
                window=cfg.t_ob,
                noise_power=powers[b],
            )
            for b in range(3)
        ]
        for bank in prep.banks:
            for b in range(3):
                estimate = iterative_toa(traces[b], bank)
                rows.append(
                    {
                        "alpha": bank.alpha,
                        "branches": bank.branches,
                        "stages": bank.stages,
                        "bs": b + 1,
                        "run_index": r_idx,
                        "tau_hat_s": estimate.tau,
                        "true_delay_s": float(dists[b]) / C0,
                        "peak_offset_s": prep.ctma_offset,
                    }
                )
    rows.sort(key=lambda r: (r["alpha"], r["run_index"], r["bs"]))
    return rows


def write_trials_csv(trials, path) -> None:
    columns = [
        "estimator",
        "alpha",
        "f_s_hz",
        "position_index",
        "run_index",
        "true_x_m",
        "true_y_m",
        "est_x_m",
        "est_y_m",
        "tau1_s",
        "tau2_s",
        "tau3_s",
        "error_m",
    ]
    with open(path, "w", newline="") as handle:
        handle.write(",".join(columns) + "\n")
        for t in trials:
            row = [
                t.estimator,
                "" if t.alpha is None else str(t.alpha),
                "" if t.f_s is None else repr(t.f_s),
                str(t.position_index),
                str(t.run_index),
                repr(t.true_x),
                repr(t.true_y),
                repr(t.est_x),
                repr(t.est_y),
                repr(t.tau1),
                repr(t.tau2),
                repr(t.tau3),
                repr(t.error),
            ]
            handle.write(",".join(row) + "\n")


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_rows_csv(rows, path) -> None:
    if not rows:
        raise ConfigurationError("no rows to write")

    def render(value) -> str:
        if value is None:
            return ""
        return repr(value) if isinstance(value, float) else str(value)

    columns = list(rows[0].keys())
    with open(path, "w", newline="") as handle:
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(render(row[c]) for c in columns) + "\n")
