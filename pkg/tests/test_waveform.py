import numpy as np
import pytest

from fmgsc.channel import ChannelRealization, FrequencyResponse, PowerDelayProfile, frequency_response, \
    sample_channel
from fmgsc.linkmodel import Grouping, LinkParams, equal_power, sum_rate
from fmgsc.numerics import circular_convolve
from fmgsc.waveform import (add_cp, apply_channel, mapping_matrix, measure_sinr_empirical, mmse_fde,
                            modulate, papr_of_block, qam_constellation, qpsk, remove_cp,
                            rrc_frequency_response, synthesize_shaped)

from conftest import random_response


def dft_matrix(n):
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * j * k / n) / np.sqrt(n)


def test_mapping_matrix_example():
    # N = 4, group on the first and third subcarriers
    g = Grouping([1, 2, 1, 0], 2)
    np.testing.assert_array_equal(mapping_matrix(g, 1).T, [[1, 0, 0, 0], [0, 0, 1, 0]])
    assert np.all(mapping_matrix(g, 2).sum(axis=0) == 1)


def test_modulate_matches_matrix_form(rng):
    g = Grouping([1, 2, 1, 0], 2)
    x1 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    x2 = rng.standard_normal(1) + 1j * rng.standard_normal(1)
    p = 1.7
    tx = modulate(g, [x1, x2], p)
    f4 = dft_matrix(4)
    expected = sum(f4.conj().T @ mapping_matrix(g, k) @ (np.sqrt(p) * dft_matrix(x.size) @ x)
                   for k, x in ((1, x1), (2, x2)))
    np.testing.assert_allclose(tx.time_signal, expected, atol=1e-12)
    # energy only on bins 0 and 2 for group 1, equal to sqrt(p) F_2 x1
    np.testing.assert_allclose(tx.spectrum[[0, 2]], np.sqrt(p) * dft_matrix(2) @ x1, atol=1e-12)
    assert tx.spectrum[3] == 0


def test_modulate_ofdm_special_case(rng):
    n = 8
    x = qpsk(rng, n)
    tx = modulate(Grouping.per_subcarrier(n), [x[i:i + 1] for i in range(n)], 2.0)
    np.testing.assert_allclose(tx.time_signal, np.fft.ifft(np.sqrt(2.0) * x, norm="ortho"), atol=1e-12)


def test_modulate_single_carrier_special_case(rng):
    n = 8
    x = qpsk(rng, n)
    tx = modulate(Grouping.single_group(n), [x], 0.5)
    np.testing.assert_allclose(tx.time_signal, np.sqrt(0.5) * x, atol=1e-12)


def test_modulate_errors():
    g = Grouping([1, 1, 2], 2)
    with pytest.raises(ValueError):
        modulate(g, [np.ones(2)], 1.0)
    with pytest.raises(ValueError):
        modulate(g, [np.ones(1), np.ones(1)], 1.0)
    with pytest.raises(ValueError):
        modulate(g, [np.ones(2), np.ones(1)], 0.0)


def test_power_conservation_and_orthogonality(rng):
    n = 32
    g = Grouping(rng.permutation(np.concatenate([[1, 2, 3], rng.integers(0, 4, n - 3)])), 3)
    p = 40.0 / g.n_used
    energies = []
    for _ in range(4000):
        syms = [qpsk(rng, int(m)) for m in g.group_sizes]
        energies.append(np.sum(np.abs(modulate(g, syms, p).time_signal) ** 2))
    assert np.mean(energies) == pytest.approx(40.0, rel=0.01)
    syms = [qpsk(rng, int(m)) for m in g.group_sizes]
    only1 = modulate(g, [syms[0], 0 * syms[1], 0 * syms[2]], p)
    spec = np.fft.fft(only1.time_signal, norm="ortho")
    assert np.sum(np.abs(spec[g.labels != 1]) ** 2) <= 1e-20


def test_cp_round_trip(rng):
    v = rng.standard_normal(16) + 0j
    np.testing.assert_array_equal(remove_cp(add_cp(v, 5), 5), v)
    np.testing.assert_array_equal(add_cp(v, 0), v)
    np.testing.assert_array_equal(add_cp(v, 5)[:5], v[-5:])
    with pytest.raises(ValueError):
        add_cp(v, 17)


@pytest.mark.parametrize("cp", [7, 8, 12])
def test_cp_makes_linear_channel_circular(rng, cp):
    n = 32
    taps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    lin = np.array([sum(taps[l] * add_cp(x, cp)[m - l] for l in range(8) if 0 <= m - l)
                    for m in range(n + cp)])
    np.testing.assert_allclose(remove_cp(lin, cp), circular_convolve(x, np.pad(taps, (0, n - 8))),
                               atol=1e-10)


def test_apply_channel_noiseless(rng):
    n = 16
    g = Grouping.single_group(n)
    tx = modulate(g, [qpsk(rng, n)], 1.0, cp_len=8)
    y = apply_channel(tx, ChannelRealization([1.0]), 0.0)
    np.testing.assert_allclose(y, tx.time_signal, atol=1e-15)
    ch = sample_channel(PowerDelayProfile(8, 1.0), rng)
    fr = frequency_response(ch, n, 1.0)
    y = apply_channel(tx, ch, 0.0)
    np.testing.assert_allclose(np.fft.fft(y, norm="ortho") * np.sqrt(n),
                               fr.gains * np.fft.fft(tx.time_signal, norm="ortho") * np.sqrt(n), atol=1e-10)


def test_apply_channel_requires_cp(rng):
    tx = modulate(Grouping.single_group(16), [qpsk(rng, 16)], 1.0, cp_len=3)
    with pytest.raises(ValueError):
        apply_channel(tx, ChannelRealization(np.ones(8)), 0.0)


def test_apply_channel_noise_variance():
    n = 1000
    g = Grouping.single_group(n)
    tx = modulate(g, [np.zeros(n)], 1.0, cp_len=1)
    rng = np.random.default_rng(9)
    samples = np.concatenate([apply_channel(tx, ChannelRealization([1.0]), 0.3, rng) for _ in range(100)])
    assert np.var(samples) == pytest.approx(0.3, rel=0.05)


def test_mmse_perfect_inversion(rng):
    n = 8
    g = Grouping([1, 2, 1, 2, 0, 1, 2, 1], 2)
    syms = [qpsk(rng, int(m)) for m in g.group_sizes]
    tx = modulate(g, syms, 2.0)
    fr = FrequencyResponse(np.ones(n), 1e-300)
    out = mmse_fde(tx.time_signal, g, fr, 2.0)
    for est, x in zip(out, syms):
        np.testing.assert_allclose(est, x, atol=1e-12)


def test_mmse_shrinks_to_zero(rng):
    n = 8
    g = Grouping.single_group(n)
    tx = modulate(g, [qpsk(rng, n)], 1.0)
    out = mmse_fde(tx.time_signal, g, FrequencyResponse(np.ones(n), 1e12), 1.0)
    assert np.max(np.abs(out[0])) < 1e-11


def test_mmse_high_snr_chain(rng):
    n = 32
    ch = ChannelRealization(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    gains = np.fft.fft(ch.taps, n)
    p = 1.0
    noise = float(np.min(np.abs(gains) ** 2)) * p / 1e4
    fr = FrequencyResponse(gains, noise)
    g = Grouping(rng.permutation(np.repeat([1, 2], 16)), 2)
    syms = [qpsk(rng, 16), qpsk(rng, 16)]
    tx = modulate(g, syms, p, cp_len=4)
    y = apply_channel(tx, ch, noise, rng)
    for est, x in zip(mmse_fde(y, g, fr, p), syms):
        assert np.linalg.norm(est - x) / np.linalg.norm(x) <= 0.02


def test_empirical_sinr_scalar_group():
    fr = FrequencyResponse(np.array([0.8 + 0.3j, 1.2, 0.5j, 0.2]), 1.0)
    g = Grouping([1, 2, 3, 0], 3)
    params = LinkParams(4, 3, 6.0)
    p = equal_power(g, params)
    measured = measure_sinr_empirical(g, fr, params, 10_000, np.random.default_rng(4))
    analytic = p * np.abs(fr.gains[:3]) ** 2
    # SINR estimate from 1e4 samples: relative std ~ 1/sqrt(1e4)
    np.testing.assert_allclose(measured, analytic, rtol=3 * 0.01 * np.sqrt(2))


def test_empirical_sinr_matches_analytic(rng):
    fr = random_response(rng, 32)
    g = Grouping(rng.permutation(np.concatenate([[1, 2], rng.integers(0, 3, 30)])), 2)
    params = LinkParams.from_snr_db(32, 2, 8.0)
    measured = measure_sinr_empirical(g, fr, params, 10_000, rng)
    np.testing.assert_allclose(measured, sum_rate(g, fr, params).sinr, rtol=0.05)


def test_empirical_sinr_scales_with_inverse_noise(rng):
    ch = ChannelRealization([1.0, 0.3j])
    n = 16
    g = Grouping.single_group(n)
    out = []
    for noise in (1e-3, 1e-4):
        fr = frequency_response(ch, n, noise)
        out.append(measure_sinr_empirical(g, fr, LinkParams(n, 1, float(n), noise), 10_000, rng)[0])
    assert out[1] / out[0] == pytest.approx(10.0, rel=0.1)


def test_papr_of_block():
    assert papr_of_block(np.exp(1j * np.linspace(0, 5, 64))) == pytest.approx(1.0)
    assert papr_of_block(np.eye(16)[3]) == pytest.approx(16.0)
    with pytest.raises(ValueError):
        papr_of_block(np.zeros(8))


def test_papr_at_least_one(rng):
    for _ in range(50):
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        assert papr_of_block(v) >= 1.0


def test_rrc_response():
    f = np.array([0.0, 0.44, 0.45, 0.5, 0.55, 0.6])
    h = rrc_frequency_response(f, 0.1)
    np.testing.assert_allclose(h[[0, 1, 2]], 1.0)
    assert h[3] == pytest.approx(np.sqrt(0.5))
    assert h[4] == pytest.approx(0.0, abs=1e-12)
    assert h[5] == 0.0
    # Nyquist: the raised cosine (squared RRC) sums to one across the band edge
    x = np.linspace(0.0, 0.1, 11)
    np.testing.assert_allclose(rrc_frequency_response(0.45 + x, 0.1) ** 2
                               + rrc_frequency_response(0.45 + x - 1, 0.1) ** 2, 1.0, atol=1e-12)


def test_shaping_degenerate_case(rng):
    blocks = rng.standard_normal((5, 64)) + 1j * rng.standard_normal((5, 64))
    samples, stats = synthesize_shaped(blocks, oversample=1, rolloff=0.0)
    np.testing.assert_allclose(samples, blocks, atol=1e-12)
    np.testing.assert_allclose(stats.papr, [papr_of_block(b) for b in blocks], rtol=1e-12)


def test_shaping_preserves_band_limited_signal(rng):
    # a block occupying only the flat part of the RRC band is interpolated exactly
    n, o = 64, 4
    spec = np.zeros(n, dtype=complex)
    spec[:5] = rng.standard_normal(5)
    x = np.fft.ifft(spec)
    samples, _ = synthesize_shaped(x, oversample=o, rolloff=0.1)
    t = np.arange(n * o) / o
    expected = sum(spec[m] * np.exp(2j * np.pi * m * t / n) for m in range(5)) / n
    np.testing.assert_allclose(samples[0], expected, atol=1e-12)
    np.testing.assert_allclose(samples[0, ::o], x, atol=1e-12)


def test_shaping_deterministic(rng):
    blocks = rng.standard_normal((3, 32)) + 0j
    a = synthesize_shaped(blocks, 4, 0.1)[1].papr
    b = synthesize_shaped(blocks, 4, 0.1)[1].papr
    np.testing.assert_array_equal(a, b)


def test_scfde_lower_papr_than_ofdm():
    rng = np.random.default_rng(11)
    n, blocks = 64, 1000
    sc = qpsk(rng, (blocks, n))  # single carrier: time samples are the symbols
    ofdm = np.fft.ifft(qpsk(rng, (blocks, n)), axis=-1, norm="ortho")
    sc_db = synthesize_shaped(sc, 4, 0.1)[1].mean_papr_db
    ofdm_db = synthesize_shaped(ofdm, 4, 0.1)[1].mean_papr_db
    assert sc_db < ofdm_db


@pytest.mark.parametrize("bits,size", [(2, 4), (2.2, 8), (3, 8), (3.33, 16), (4, 16), (5, 32),
                                       (6, 64), (7, 128), (8, 256), (1.0, 4)])
def test_qam_constellation(bits, size):
    pts = qam_constellation(bits)
    assert pts.size == size
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.unique(np.round(pts, 12)).size == size


def test_qpsk_is_unit_energy(rng):
    np.testing.assert_allclose(np.abs(qpsk(rng, 100)), 1.0)


def test_empirical_sinr_gain_modes_agree(rng):
    fr = random_response(rng, 32)
    g = Grouping.single_group(32)
    params = LinkParams.from_snr_db(32, 1, 10.0)
    eq = measure_sinr_empirical(g, fr, params, 5_000, np.random.default_rng(1))
    fitted = measure_sinr_empirical(g, fr, params, 5_000, np.random.default_rng(1), gain="fitted")
    np.testing.assert_allclose(eq, fitted, rtol=0.02)
    with pytest.raises(ValueError):
        measure_sinr_empirical(g, fr, params, 10, rng, gain="blind")
