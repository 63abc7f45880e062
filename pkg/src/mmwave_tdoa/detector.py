"""Energy-detector bank TOA estimation and the Nyquist-sampling baseline.

A CTMA branch integrates the squared input over a trailing window and
holds the maximum of that output over its observation slot. The bank runs
M branches over contiguous slots, picks the branch with the largest held
maximum, then re-runs over the winning slot with slots narrowed by M.
After Q+1 passes the estimate is the start of the final slot, i.e. the
windowed-energy peak time quantized to the resolution T_ob / M^(Q+1).

Every pass ranks slots on the same windowed-energy output (the integration
window is the pulse duration throughout; only the observation slots
shrink), so the refinement provably converges on the dense-grid peak:
noise-free or not, the returned estimate equals delta * floor(t*/delta)
with t* the dense-grid argmax and delta the final resolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .trace import SignalTrace


@dataclass(frozen=True)
class DetectorBankConfig:
    """Dimensioning of the delay bank.

    branches: CTMAs compared per pass (M >= 2).
    stages: fixed delay stages Q (passes = Q + 1).
    t_ob: observation window guaranteed to contain the pulse everywhere.
    t_p: total pulse duration; also the CTMA integration window.
    """

    branches: int
    stages: int
    t_ob: float
    t_p: float

    def __post_init__(self):
        if self.branches < 2:
            raise ConfigurationError("need at least 2 branches")
        if self.stages < 0:
            raise ConfigurationError("stage count must be non-negative")
        if not (self.t_ob > self.t_p > 0.0):
            raise ConfigurationError("need t_ob > t_p > 0")
        if self.branches ** (self.stages + 1) > 2**62:
            raise ConfigurationError("branches ** (stages + 1) overflows")

    @property
    def alpha(self) -> int:
        return self.branches ** (self.stages + 1)

    @property
    def resolution(self) -> float:
        """Finest time cell of the architecture, t_ob / M^(Q+1)."""
        return self.t_ob / self.alpha


@dataclass(frozen=True)
class ToaEstimate:
    """Selected branch per pass, the running estimates, and the final TOA.

    The final value is exactly sum_q (M - m_q) * t_ob / M^q over the
    selected branch indices, reconstructible from `selected` alone.
    """

    selected: tuple[int, ...]
    taus: tuple[float, ...]
    tau: float
    detected: bool = True


def _windowed_energy(v: SignalTrace, t_win: float) -> np.ndarray:
    """Trailing-window energy on the trace grid, zero-extended before the
    record start: x[i] = integral of v^2 over [t_i - t_win, t_i]."""
    w = int(round(t_win / v.step))
    if w < 1:
        raise ConfigurationError("integration window shorter than one grid step")
    squared = v.samples * v.samples
    cum = np.concatenate([np.zeros(w + 1), np.cumsum(squared)])
    return (cum[w + 1 :] - cum[1 : -w]) * v.step


def ctma_output(
    v: SignalTrace, t_win: float, interval: tuple[float, float]
) -> tuple[float, float]:
    """Max of the trailing-window energy over [t_start, t_end], and the grid
    time achieving it (first achiever on ties, matching a hold capacitor
    that latches the earliest maximum)."""
    t_start, t_end = interval
    if not (t_end > t_start):
        raise ConfigurationError("interval must have positive length")
    if t_start - t_win < v.start_time - 0.5 * v.step or t_end > v.end_time + 0.5 * v.step:
        raise ConfigurationError(
            "trace does not cover the requested interval plus integration window"
        )
    x = _windowed_energy(v, t_win)
    i0, i1 = v.index_range(t_start, t_end + 0.5 * v.step)
    if i1 <= i0:
        raise ConfigurationError("interval contains no grid points")
    k = int(np.argmax(x[i0:i1]))
    return float(x[i0 + k]), float(v.start_time + (i0 + k) * v.step)


def lpf_approximation(v: SignalTrace, t_p: float) -> SignalTrace:
    """Second-order low-pass approximation of the energy detector: v^2
    convolved with h(t) = beta^2 t exp(-beta t), beta = 1.4615 / t_p."""
    if not (t_p > 0.0):
        raise ConfigurationError("pulse duration must be positive")
    beta = 1.4615 / t_p
    n_kernel = int(np.ceil(20.0 / (beta * v.step)))  # exp(-20) tail cutoff
    t = np.arange(n_kernel) * v.step
    kernel = beta * beta * t * np.exp(-beta * t)

    squared = v.samples * v.samples
    nfft = 1
    while nfft < squared.size + n_kernel:
        nfft *= 2
    out = np.fft.irfft(np.fft.rfft(squared, nfft) * np.fft.rfft(kernel, nfft), nfft)
    filtered = out[: squared.size] * v.step
    return SignalTrace(
        start_time=v.start_time, step=v.step, samples=filtered, units="V^2"
    )


def iterative_toa(
    v: SignalTrace,
    cfg: DetectorBankConfig,
    noise_power: float | None = None,
    detection_gamma: float = 3.0,
) -> ToaEstimate:
    """Run the Q+1-pass delay-bank refinement over [0, t_ob].

    Branch m of a pass owns the slot starting (M - m) slot-widths into the
    current interval (branch indexing runs backwards in time), and the
    branch with the largest held maximum wins; ties go to the larger m,
    i.e. the earlier slot. The single received trace is re-presented to
    every pass, delay lines being modeled as ideal.

    When noise_power is given, the estimate is flagged undetected if the
    global held maximum stays below gamma * noise_power * t_p.
    """
    delta = cfg.resolution
    if delta < 4.0 * v.step:
        raise ConfigurationError(
            f"resolution {delta:.3e} s below 4 grid steps "
            f"({4.0 * v.step:.3e} s); refine the grid or relax the bank"
        )
    if v.start_time > 0.0 or v.end_time < cfg.t_ob - 0.5 * v.step:
        raise ConfigurationError("trace must cover the observation window [0, t_ob]")

    x = _windowed_energy(v, cfg.t_p)
    m_count = cfg.branches
    selected: list[int] = []
    taus: list[float] = []
    slot_start = 0.0
    for q in range(1, cfg.stages + 2):
        width = cfg.t_ob / m_count**q
        best_j, best_val = 0, -np.inf
        for j in range(m_count):  # j counts slots in time order
            i0, i1 = v.index_range(slot_start + j * width, slot_start + (j + 1) * width)
            val = float(np.max(x[i0:i1])) if i1 > i0 else -np.inf
            if val > best_val:
                best_j, best_val = j, val
        selected.append(m_count - best_j)  # earlier slot = larger branch index
        slot_start += best_j * width
        taus.append(slot_start)

    tau = 0.0
    for q, m_hat in enumerate(selected, start=1):
        tau += (m_count - m_hat) * cfg.t_ob / m_count**q

    detected = True
    if noise_power is not None:
        i0, i1 = v.index_range(0.0, cfg.t_ob + 0.5 * v.step)
        detected = bool(np.max(x[i0:i1]) >= detection_gamma * noise_power * cfg.t_p)
    return ToaEstimate(selected=tuple(selected), taus=tuple(taus), tau=tau, detected=detected)


def sampling_toa(v: SignalTrace, t_p: float, f_s: float) -> float:
    """Nyquist-style baseline: sample the low-pass detector output at rate
    f_s (phase anchored at t = 0) and return the time of the largest sample."""
    grid_rate = 1.0 / v.step
    if f_s > grid_rate * (1.0 + 1e-12):
        raise ConfigurationError(
            f"sampling rate {f_s:.3e} Hz exceeds the internal grid rate {grid_rate:.3e} Hz"
        )
    filtered = lpf_approximation(v, t_p)
    first = int(np.ceil(filtered.start_time * f_s - 1e-9))
    t_samples = np.arange(first, int(np.floor(filtered.end_time * f_s + 1e-9)) + 1) / f_s
    values = np.interp(t_samples, filtered.times(), filtered.samples)
    return float(t_samples[int(np.argmax(values))])


def pulse_start_from_toa(tau: float, t_p: float) -> float:
    """Start time of the pulse whose energy peak was estimated at tau."""
    if tau < t_p:
        raise ConfigurationError("TOA precedes one pulse duration after the window start")
    return tau - t_p
