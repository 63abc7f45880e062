"""Gaussian derivative pulse synthesis and spectral measurements.

The transmitted waveform is the p-th time derivative of a Gaussian,

    g_p(t) = A * d^p/dt^p exp(-t^2 / (2 sigma^2)),

with sigma = sqrt(p) / (2 pi f_c) so that the magnitude spectrum
|f|^p exp(-(2 pi f sigma)^2 / 2) peaks exactly at the requested center
frequency f_c. The amplitude A is fixed by requiring the time-averaged
power over the pulse's effective duration to equal the configured power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermval

from .errors import ConfigurationError
from .trace import SignalTrace

# 20 THz internal rate: resolves the full pulse spectrum (< 1 THz content)
# and the finest delay quantum exercised by the delay-bank experiments.
DEFAULT_STEP = 5e-14


@dataclass(frozen=True)
class PulseSpec:
    """Derivative order, center frequency (Hz), average power (W) over the
    effective duration, and the energy fraction defining that duration."""

    order: int
    center_frequency: float
    power: float
    energy_fraction_for_duration: float = 0.9999

    def __post_init__(self):
        if self.order < 0 or int(self.order) != self.order:
            raise ConfigurationError("pulse order must be a non-negative integer")
        if not (self.center_frequency > 0.0):
            raise ConfigurationError("center frequency must be positive")
        if not (self.power > 0.0):
            raise ConfigurationError("pulse power must be positive")
        if not (0.99 <= self.energy_fraction_for_duration < 1.0):
            raise ConfigurationError(
                "energy fraction for the duration must lie in [0.99, 1)"
            )

    @property
    def sigma(self) -> float:
        """Width of the base Gaussian placing the spectral peak at f_c."""
        if self.order == 0:
            raise ConfigurationError(
                "order 0 puts the spectral peak at DC; use order >= 1 "
                "for a pulse centered at a positive frequency"
            )
        return math.sqrt(self.order) / (2.0 * math.pi * self.center_frequency)


def gaussian_derivative(t: np.ndarray, p: int, sigma: float) -> np.ndarray:
    # d^p/dt^p exp(-t^2/(2s^2)) = (-1)^p (s*sqrt2)^-p H_p(t/(s*sqrt2)) exp(-t^2/(2s^2))
    x = t / (sigma * math.sqrt(2.0))
    coeffs = np.zeros(p + 1)
    coeffs[p] = 1.0
    hermite = hermval(x, coeffs)
    scale = (-1.0) ** p * (sigma * math.sqrt(2.0)) ** (-p)
    return scale * hermite * np.exp(-x * x)


def generate_pulse(spec: PulseSpec, step: float = DEFAULT_STEP) -> SignalTrace:
    """Synthesize g_p on its own support window, centered at t = 0.

    The support extends past the outermost oscillation by 10 sigma, so the
    stored tail is negligible for every energy measure used downstream.
    """
    if not (step > 0.0):
        raise ConfigurationError("grid step must be positive")
    max_step = 1.0 / (20.0 * spec.center_frequency)
    if step > max_step:
        raise ConfigurationError(
            f"grid step {step:.3e} s too coarse for f_c = "
            f"{spec.center_frequency:.3e} Hz; need step <= {max_step:.3e} s"
        )
    sigma = spec.sigma  # raises for order 0
    half_width = sigma * (math.sqrt(2.0 * (2.0 * spec.order + 1.0)) + 10.0)
    n_half = int(math.ceil(half_width / step))
    t = np.arange(-n_half, n_half + 1) * step

    shape = gaussian_derivative(t, spec.order, sigma)
    unit = SignalTrace(start_time=-n_half * step, step=step, samples=shape)
    t_p = effective_duration(unit, spec.energy_fraction_for_duration)
    # Average power over T_p equals spec.power: total energy = power * T_p.
    amplitude = math.sqrt(spec.power * t_p / unit.energy())
    return SignalTrace(
        start_time=-n_half * step, step=step, samples=amplitude * shape, units="V"
    )


def effective_duration(trace: SignalTrace, fraction: float) -> float:
    """Length of the shortest interval, centered on the energy centroid,
    holding `fraction` of the trace energy."""
    if not (0.99 <= fraction < 1.0):
        raise ConfigurationError("energy fraction must lie in [0.99, 1)")
    e = trace.samples * trace.samples
    total = float(np.sum(e))
    if total <= 0.0:
        raise ConfigurationError("cannot measure the duration of a zero-energy trace")

    cum = np.cumsum(e)
    centroid = float(np.sum(np.arange(e.size) * e) / total)
    ic = int(round(centroid))
    n = e.size

    def contained(m: int) -> float:
        lo = max(ic - m, 0)
        hi = min(ic + m, n - 1)
        below = cum[lo - 1] if lo > 0 else 0.0
        return float(cum[hi] - below)

    # contained(m) is non-decreasing in m: bisect for the smallest half-width.
    target = fraction * total
    lo_m, hi_m = 0, max(ic, n - 1 - ic)
    if contained(hi_m) < target:
        return trace.duration
    while lo_m < hi_m:
        mid = (lo_m + hi_m) // 2
        if contained(mid) >= target:
            hi_m = mid
        else:
            lo_m = mid + 1
    return 2.0 * lo_m * trace.step


def _power_spectrum(trace: SignalTrace, nfft: int | None = None):
    if nfft is None:
        nfft = 1 << 18
        while nfft < 4 * trace.samples.size:
            nfft *= 2
    spectrum = np.fft.rfft(trace.samples, nfft) * trace.step
    freqs = np.fft.rfftfreq(nfft, trace.step)
    return freqs, np.abs(spectrum) ** 2


def spectral_peak(trace: SignalTrace) -> float:
    """Frequency of the magnitude-spectrum maximum (zero-padded FFT grid)."""
    freqs, power = _power_spectrum(trace)
    return float(freqs[int(np.argmax(power))])


def half_power_band(trace: SignalTrace) -> tuple[float, float]:
    """Frequencies where the power spectrum crosses half of its peak value.

    Crossing points are refined by linear interpolation between FFT bins.
    """
    if not np.any(trace.samples):
        raise ConfigurationError("half-power band of an all-zero trace is undefined")
    freqs, power = _power_spectrum(trace)
    k = int(np.argmax(power))
    half = power[k] / 2.0

    below_lo = np.nonzero(power[:k] < half)[0]
    above_hi = np.nonzero(power[k:] < half)[0]
    if below_lo.size == 0 or above_hi.size == 0:
        raise ConfigurationError("power spectrum never crosses half power in band")
    i = below_lo[-1]
    f_low = freqs[i] + (half - power[i]) / (power[i + 1] - power[i]) * (
        freqs[i + 1] - freqs[i]
    )
    j = k + above_hi[0]
    f_high = freqs[j - 1] + (power[j - 1] - half) / (power[j - 1] - power[j]) * (
        freqs[j] - freqs[j - 1]
    )
    return float(f_low), float(f_high)
