import numpy as np
import pytest

from mmwave_tdoa import (
    C0,
    AbsorptionTable,
    ChannelSpec,
    ConfigurationError,
    SignalTrace,
    channel_response,
    ingest_absorption,
    noise_variance,
    propagate,
    transmit_psd,
)
from mmwave_tdoa.channel import noise_background_psd, noise_self_psd

BAND = (100e9, 300e9)


def spec_at(distance):
    return ChannelSpec(distance=distance, center_frequency=200e9, band=BAND)


# ---------------------------------------------------------------- ingestion


def test_ingest_simple_table(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,k_per_m\n1.0e11,0.001\n2.0e11,0.003\n3.0e11,0.002\n")
    table = ingest_absorption(path)
    assert table.span == (1.0e11, 3.0e11)
    # interpolated midpoint equals the arithmetic mean of its neighbors
    assert table.coefficient(1.5e11) == pytest.approx(0.002)


def test_ingest_rejects_non_monotone(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,k_per_m\n2.0e11,0.001\n1.0e11,0.003\n")
    with pytest.raises(ConfigurationError, match="row 3"):
        ingest_absorption(path)


def test_ingest_rejects_negative_k(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,k_per_m\n1.0e11,0.001\n2.0e11,-0.003\n")
    with pytest.raises(ConfigurationError, match="row 3"):
        ingest_absorption(path)


def test_ingest_rejects_malformed_row(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,k_per_m\n1.0e11,0.001\nnot-a-number,0.1\n")
    with pytest.raises(ConfigurationError, match="row 3"):
        ingest_absorption(path)


def test_ingest_rejects_unknown_header(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("freq,k\n1.0e11,0.001\n")
    with pytest.raises(ConfigurationError, match="header"):
        ingest_absorption(path)


def test_ingest_multi_species_aggregates(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text(
        "frequency_hz,species,K_per_m\n"
        "1.0e11,H2O,1.0\n1.0e11,O2,10.0\n"
        "2.0e11,H2O,2.0\n2.0e11,O2,20.0\n"
    )
    table = ingest_absorption(path, mole_fractions={"H2O": 0.02, "O2": 0.2})
    assert table.coefficient(1.0e11) == pytest.approx(0.02 * 1.0 + 0.2 * 10.0)
    assert table.coefficient(2.0e11) == pytest.approx(0.02 * 2.0 + 0.2 * 20.0)


def test_ingest_multi_species_needs_fractions(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,species,K_per_m\n1.0e11,H2O,1.0\n2.0e11,H2O,2.0\n")
    with pytest.raises(ConfigurationError, match="mole-fraction"):
        ingest_absorption(path)
    with pytest.raises(ConfigurationError, match="mole fraction"):
        ingest_absorption(path, mole_fractions={"O2": 0.2})


def test_table_band_coverage(lossless_table):
    assert lossless_table.covers(BAND)
    assert not lossless_table.covers((0.5e9, 300e9))


# ---------------------------------------------------------- channel response


def test_lossless_response_magnitude(lossless_table):
    freqs = np.array([150e9, 200e9, 250e9])
    h = channel_response(spec_at(1.0), lossless_table, freqs)
    expected = C0 / (4.0 * np.pi * 1.0 * 200e9)  # 1.1928e-4
    np.testing.assert_allclose(np.abs(h), expected, rtol=1e-12)


def test_doubling_distance_halves_magnitude(lossless_table):
    freqs = np.array([200e9])
    h1 = np.abs(channel_response(spec_at(1.0), lossless_table, freqs))
    h2 = np.abs(channel_response(spec_at(2.0), lossless_table, freqs))
    assert h2 == pytest.approx(h1 / 2.0)


def test_constant_k_closed_form(flat_table):
    freqs = np.linspace(100e9, 300e9, 7)
    for r in (0.5, 2.0, 5.0):
        h = channel_response(spec_at(r), flat_table, freqs)
        spreading = C0 / (4.0 * np.pi * r * 200e9)
        np.testing.assert_allclose(np.abs(h), spreading * np.exp(-0.5 * 0.01 * r), rtol=1e-12)


def test_magnitude_decreasing_in_distance(flat_table):
    freqs = np.array([200e9])
    mags = [np.abs(channel_response(spec_at(r), flat_table, freqs))[0] for r in (1, 2, 4, 8)]
    assert all(a > b for a, b in zip(mags, mags[1:]))


def test_group_delay_matches_distance(flat_table):
    r = 1.7
    freqs = np.linspace(150e9, 250e9, 2001)
    h = channel_response(spec_at(r), flat_table, freqs)
    phase = np.unwrap(np.angle(h))
    delay = -np.gradient(phase, freqs) / (2.0 * np.pi)
    np.testing.assert_allclose(delay, r / C0, rtol=1e-6)


def test_response_rejects_out_of_span(flat_table):
    with pytest.raises(ConfigurationError, match="span"):
        channel_response(spec_at(1.0), flat_table, np.array([1e9]))


def test_spec_rejects_bad_geometry():
    with pytest.raises(ConfigurationError):
        ChannelSpec(distance=-1.0, center_frequency=200e9, band=BAND)
    with pytest.raises(ConfigurationError):
        ChannelSpec(distance=1.0, center_frequency=200e9, band=(300e9, 100e9))


# ------------------------------------------------------------ noise variance


def test_noise_vanishes_without_absorption(pulse2, lossless_table):
    psd = transmit_psd(pulse2, BAND, 1e-6)
    assert noise_variance(spec_at(2.0), lossless_table, psd) == 0.0


def test_noise_variance_against_simpson_oracle(pulse2, flat_table):
    spec = spec_at(2.0)
    psd = transmit_psd(pulse2, BAND, 1e-6)
    value = noise_variance(spec, flat_table, psd)

    segments = 40960  # 10x the implementation resolution
    f = np.linspace(BAND[0], BAND[1], segments + 1)
    k = flat_table.coefficient(f)
    s_g = np.interp(f, psd[0], psd[1])
    y = noise_background_psd(spec, k) + noise_self_psd(spec, k, s_g)
    h = (f[-1] - f[0]) / segments
    oracle = h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2]))
    assert value == pytest.approx(oracle, rel=0.01)


def test_noise_saturates_to_background_far_away(pulse2, flat_table):
    """The self-induced term dies with distance; only background survives."""
    psd = transmit_psd(pulse2, BAND, 1e-6)
    far = spec_at(1e5)
    f = np.linspace(BAND[0], BAND[1], 4097)
    background_only = np.trapezoid(noise_background_psd(far, flat_table.coefficient(f)), f)
    assert noise_variance(far, flat_table, psd) == pytest.approx(background_only, rel=1e-6)


def test_noise_variance_requires_band_coverage(pulse2):
    narrow = AbsorptionTable(frequencies=np.array([150e9, 250e9]), k=np.array([0.0, 0.0]))
    psd = transmit_psd(pulse2, BAND, 1e-6)
    with pytest.raises(ConfigurationError, match="band"):
        noise_variance(spec_at(1.0), narrow, psd)


def test_transmit_psd_normalization(pulse2):
    freqs, psd = transmit_psd(pulse2, BAND, 1e-6)
    in_band = (freqs >= BAND[0]) & (freqs <= BAND[1])
    assert np.trapezoid(psd[in_band], freqs[in_band]) == pytest.approx(1e-6, rel=1e-9)


# --------------------------------------------------------------- propagation


def test_propagation_delay_by_cross_correlation(pulse2, lossless_table):
    r = C0 * 5e-9
    rx = propagate(pulse2, spec_at(r), lossless_table, seed=1, window=10e-9, noise_power=0.0)
    corr = np.correlate(rx.samples, pulse2.samples, mode="full")
    lag = (np.argmax(corr) - (len(pulse2) - 1)) * rx.step + (rx.start_time - pulse2.start_time)
    assert abs(lag - 5e-9) <= rx.step


def test_propagation_energy_centroid_shift(pulse2, lossless_table):
    def centroid(trace):
        e = trace.samples**2
        return float(np.sum(trace.times() * e) / np.sum(e))

    r = 0.87
    rx = propagate(pulse2, spec_at(r), lossless_table, seed=1, window=10e-9, noise_power=0.0)
    assert abs((centroid(rx) - centroid(pulse2)) - r / C0) <= rx.step


def test_propagation_attenuates_monotonically(pulse2, flat_table):
    energies = [
        propagate(pulse2, spec_at(r), flat_table, seed=0, window=10e-9, noise_power=0.0).energy()
        for r in (0.5, 1.0, 2.0, 2.8)
    ]
    assert all(a > b for a, b in zip(energies, energies[1:]))


def test_propagation_deterministic_given_seed(pulse2, flat_table):
    a = propagate(pulse2, spec_at(2.0), flat_table, seed=99, window=10e-9)
    b = propagate(pulse2, spec_at(2.0), flat_table, seed=99, window=10e-9)
    assert np.array_equal(a.samples, b.samples)
    c = propagate(pulse2, spec_at(2.0), flat_table, seed=100, window=10e-9)
    assert not np.array_equal(a.samples, c.samples)


def test_propagation_window_overflow_names_requirement(pulse2, lossless_table):
    with pytest.raises(ConfigurationError, match="at least"):
        propagate(pulse2, spec_at(C0 * 9e-9), lossless_table, seed=0, window=5e-9)


def test_noise_only_run_matches_variance(pulse2, flat_table):
    spec = spec_at(2.0)
    psd = transmit_psd(pulse2, BAND, 1e-6)
    target = noise_variance(spec, flat_table, psd)
    silent = SignalTrace(pulse2.start_time, pulse2.step, np.zeros(8))
    rx = propagate(silent, spec, flat_table, seed=123, window=55e-9, noise_power=target)
    assert len(rx) >= 1_000_000
    assert np.var(rx.samples) == pytest.approx(target, rel=0.05)


def test_noise_is_white_within_band(pulse2, flat_table):
    spec = spec_at(2.0)
    silent = SignalTrace(pulse2.start_time, pulse2.step, np.zeros(8))
    rx = propagate(silent, spec, flat_table, seed=5, window=55e-9, noise_power=1e-16)
    n = rx.samples - np.mean(rx.samples)
    nfft = 1 << int(np.ceil(np.log2(2 * n.size)))
    ac = np.fft.irfft(np.abs(np.fft.rfft(n, nfft)) ** 2, nfft)[: n.size]
    ac = ac / ac[0]
    lag0 = int(round(20.0 / (BAND[1] - BAND[0]) / rx.step))  # 20 periods of 1/B
    assert np.max(np.abs(ac[lag0 : lag0 + 4000])) < 0.05
