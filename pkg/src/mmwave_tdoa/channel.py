"""Absorption + spreading channel: frequency response, molecular noise, propagation.

The frequency response over a path of length R is

    H(f, R) = [c0 / (4 pi R f_c)] * exp(-j 2 pi f R / c0) * exp(-0.5 k(f) R),

a frequency-flat spreading amplitude, the propagation delay R/c0, and the
medium absorption with coefficient k(f) read from a tabulated file. The
absorbing medium also re-emits: the noise power integrates a background
term (thermal emission of the absorbing path) and a self-induced term
(re-emission of the pulse's own absorbed energy) over the receiver band.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SimulationError
from .pulse import effective_duration
from .trace import SignalTrace

C0 = 299_792_458.0  # vacuum speed of light, m/s
BOLTZMANN = 1.380649e-23  # J/K


@dataclass(frozen=True)
class AbsorptionTable:
    """Medium absorption coefficient k(f) in 1/m, tabulated over frequency."""

    frequencies: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        k = np.asarray(self.k, dtype=np.float64)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "k", k)
        if f.ndim != 1 or f.size < 2 or f.shape != k.shape:
            raise ConfigurationError("absorption table needs >= 2 (frequency, k) rows")
        if not np.all(np.diff(f) > 0.0):
            raise ConfigurationError("absorption table frequencies must strictly increase")
        if np.any(k < 0.0):
            raise ConfigurationError("absorption coefficients must be non-negative")

    @property
    def span(self) -> tuple[float, float]:
        return float(self.frequencies[0]), float(self.frequencies[-1])

    def covers(self, band: tuple[float, float]) -> bool:
        lo, hi = self.span
        return lo <= band[0] and band[1] <= hi

    def coefficient(self, frequencies) -> np.ndarray:
        """Linear interpolation of k(f); values outside the span hold the edges."""
        return np.interp(np.abs(frequencies), self.frequencies, self.k)


@dataclass(frozen=True)
class ChannelSpec:
    """One node-to-receiver path: length, pulse center frequency, receiver band, temperature."""

    distance: float
    center_frequency: float
    band: tuple[float, float]
    temperature: float = 296.0

    def __post_init__(self):
        if not (self.distance > 0.0):
            raise ConfigurationError("path length must be positive")
        if not (0.0 < self.band[0] < self.band[1]):
            raise ConfigurationError("band limits must be ordered and positive")
        if not (self.center_frequency > 0.0):
            raise ConfigurationError("center frequency must be positive")
        if not (self.temperature > 0.0):
            raise ConfigurationError("temperature must be positive")


def ingest_absorption(path, mole_fractions: dict[str, float] | None = None) -> AbsorptionTable:
    """Load an absorption table from CSV.

    Two layouts are accepted:
      frequency_hz,k_per_m            -- the summed medium coefficient
      frequency_hz,species,K_per_m    -- per-species coefficients, combined as
                                         k(f) = sum_j fraction_j * K_j(f) using
                                         the supplied mole-fraction map

    Raises ConfigurationError naming the offending row on malformed input.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty absorption file") from None
        header = [h.strip().lower() for h in header]
        if header == ["frequency_hz", "k_per_m"]:
            per_species = False
        elif header == ["frequency_hz", "species", "k_per_m"]:
            per_species = True
            if mole_fractions is None:
                raise ConfigurationError(
                    f"{path}: per-species table needs a mole-fraction map"
                )
        else:
            raise ConfigurationError(
                f"{path}: unrecognized header {header!r}; expected "
                "'frequency_hz,k_per_m' or 'frequency_hz,species,K_per_m'"
            )

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                if per_species:
                    freq, species, value = float(row[0]), row[1].strip(), float(row[2])
                else:
                    freq, species, value = float(row[0]), None, float(row[1])
            except (ValueError, IndexError):
                raise ConfigurationError(f"{path}: row {lineno}: malformed row {row!r}") from None
            if value < 0.0:
                raise ConfigurationError(
                    f"{path}: row {lineno}: negative absorption coefficient {value}"
                )
            rows.append((lineno, freq, species, value))

    if per_species:
        grids: dict[str, list[tuple[int, float, float]]] = {}
        for lineno, freq, species, value in rows:
            grids.setdefault(species, []).append((lineno, freq, value))
        merged: dict[float, float] = {}
        reference = None
        for species, entries in grids.items():
            if species not in mole_fractions:
                raise ConfigurationError(
                    f"{path}: no mole fraction given for species {species!r}"
                )
            freqs = [freq for _, freq, _ in entries]
            if reference is None:
                reference = freqs
                merged = {freq: 0.0 for freq in freqs}
            elif freqs != reference:
                raise ConfigurationError(
                    f"{path}: species {species!r} is not tabulated on the same "
                    "frequency grid as the others"
                )
            for _, freq, value in entries:
                merged[freq] += mole_fractions[species] * value
        pairs = sorted(merged.items())
        freqs = np.array([f for f, _ in pairs])
        k = np.array([v for _, v in pairs])
    else:
        freqs = np.array([freq for _, freq, _, _ in rows])
        k = np.array([value for _, _, _, value in rows])
        order = np.argsort(freqs)
        if not np.array_equal(order, np.arange(order.size)):
            bad = int(np.nonzero(np.diff(freqs) <= 0)[0][0])
            raise ConfigurationError(
                f"{path}: row {rows[bad + 1][0]}: frequencies must strictly increase"
            )

    if freqs.size < 2:
        raise ConfigurationError(f"{path}: need at least two rows")
    return AbsorptionTable(frequencies=freqs, k=k)


def _require_band_covered(table: AbsorptionTable, band: tuple[float, float]) -> None:
    if not table.covers(band):
        lo, hi = table.span
        raise ConfigurationError(
            f"absorption table spans [{lo:.3e}, {hi:.3e}] Hz but the band "
            f"[{band[0]:.3e}, {band[1]:.3e}] Hz must be covered"
        )


def channel_response(spec: ChannelSpec, table: AbsorptionTable, frequencies) -> np.ndarray:
    """Complex H(f, R) at the requested frequencies (must lie in the table span)."""
    f = np.asarray(frequencies, dtype=np.float64)
    lo, hi = table.span
    if np.any(f < lo) or np.any(f > hi):
        raise ConfigurationError("requested frequencies fall outside the table span")
    r = spec.distance
    amplitude = C0 / (4.0 * np.pi * r * spec.center_frequency)
    phase = np.exp(-2j * np.pi * f * r / C0)
    absorption = np.exp(-0.5 * table.coefficient(f) * r)
    return amplitude * phase * absorption


def transmit_psd(pulse: SignalTrace, band: tuple[float, float], power: float):
    """One-sided PSD of the transmitted pulse, scaled so its integral over
    the band equals the pulse power. Returns (frequencies, psd)."""
    nfft = 1 << 16
    while nfft < 4 * pulse.samples.size:
        nfft *= 2
    freqs = np.fft.rfftfreq(nfft, pulse.step)
    density = np.abs(np.fft.rfft(pulse.samples, nfft) * pulse.step) ** 2
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    scale = power / np.trapezoid(density[in_band], freqs[in_band])
    return freqs, density * scale


def noise_background_psd(spec: ChannelSpec, k: np.ndarray) -> np.ndarray:
    """Thermal emission of the absorbing path seen by the receiver, W/Hz."""
    emissivity = 1.0 - np.exp(-k * spec.distance)
    aperture = (C0 / (np.sqrt(4.0 * np.pi) * spec.center_frequency)) ** 2
    return BOLTZMANN * spec.temperature * emissivity * aperture


def noise_self_psd(spec: ChannelSpec, k: np.ndarray, pulse_psd: np.ndarray) -> np.ndarray:
    """Re-emission of the pulse's own absorbed energy, W/Hz."""
    emissivity = 1.0 - np.exp(-k * spec.distance)
    spread = (C0 / (4.0 * np.pi * spec.distance * spec.center_frequency)) ** 2
    return pulse_psd * emissivity * spread


def noise_variance(spec: ChannelSpec, table: AbsorptionTable, pulse_psd) -> float:
    """Total molecular-absorption noise power over the band, in watts.

    pulse_psd is the (frequencies, psd) pair from transmit_psd. Both noise
    terms vanish identically for a transparent medium (k = 0): nothing is
    absorbed, so nothing is re-emitted.
    """
    _require_band_covered(table, spec.band)
    psd_freqs, psd_values = pulse_psd
    f = np.linspace(spec.band[0], spec.band[1], 4097)
    k = table.coefficient(f)
    s_g = np.interp(f, psd_freqs, psd_values)
    total = noise_background_psd(spec, k) + noise_self_psd(spec, k, s_g)
    return float(np.trapezoid(total, f))


def _band_limited_noise(rng, n: int, step: float, band: tuple[float, float], power: float):
    """White Gaussian noise restricted to the band, with total power `power`."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, step)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    shaped = np.fft.irfft(spectrum, n)
    # A unit-variance white sequence keeps the fraction 2 * (f2 - f1) * step
    # of its power inside the band; rescale to the requested total power.
    kept = 2.0 * (band[1] - band[0]) * step
    return shaped * np.sqrt(power / kept)


def propagate(
    pulse: SignalTrace,
    spec: ChannelSpec,
    table: AbsorptionTable,
    seed,
    emit_time: float = 0.0,
    window: float = 10e-9,
    noise_power: float | None = None,
) -> SignalTrace:
    """Received waveform on [0, window]: channel-filtered pulse plus noise.

    The pulse's own time origin is emitted at emit_time, so a waveform
    feature at pulse-frame time u is received at emit_time + u + R/c0.
    The delay is applied as a spectral phase, which realizes fractional-step
    delays exactly in the band-limited sense. `noise_power` overrides the
    noise variance (0 disables noise); by default it is computed from the
    pulse itself via noise_variance. Deterministic given the seed.
    """
    _require_band_covered(table, spec.band)
    step = pulse.step
    delay = emit_time + spec.distance / C0
    arrival_start = delay + pulse.start_time
    arrival_end = delay + pulse.end_time
    if arrival_start < 0.0:
        raise ConfigurationError(
            f"pulse support starts at {arrival_start:.3e} s, before the window opens"
        )
    if arrival_end > window:
        raise ConfigurationError(
            f"observation window {window:.3e} s too short; needs at least "
            f"{arrival_end:.3e} s to contain the received pulse"
        )

    n_out = int(round(window / step)) + 1
    nfft = 1
    while nfft < n_out + pulse.samples.size + 4096:
        nfft *= 2
    freqs = np.fft.rfftfreq(nfft, step)
    spectrum = np.fft.rfft(pulse.samples, nfft)
    amplitude = C0 / (4.0 * np.pi * spec.distance * spec.center_frequency)
    response = amplitude * np.exp(-0.5 * table.coefficient(freqs) * spec.distance)
    shift = np.exp(-2j * np.pi * freqs * arrival_start)
    received = np.fft.irfft(spectrum * response * shift, nfft)[:n_out]

    if noise_power is None:
        t_p = effective_duration(pulse, 0.9999)
        psd = transmit_psd(pulse, spec.band, pulse.energy() / t_p)
        noise_power = noise_variance(spec, table, psd)
    if noise_power < 0.0:
        raise SimulationError("noise power must be non-negative")
    if noise_power > 0.0:
        rng = np.random.default_rng(seed)
        received = received + _band_limited_noise(rng, n_out, step, spec.band, noise_power)

    return SignalTrace(start_time=0.0, step=step, samples=received, units="V")
