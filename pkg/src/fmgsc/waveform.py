"""Time-domain FMG-SC transceiver and PAPR measurement.

Group ``k`` DFT-spreads its ``M_k`` symbols, scales them by ``sqrt(p)``,
maps them onto its subcarriers in ascending index order and the transmitter
takes one ``N``-point IDFT over all groups. The receiver applies a
per-subcarrier MMSE equalizer and despreads each group with an ``M_k``-point
IDFT. All transforms are unitary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_complex_vector
from .channel import ChannelRealization, FrequencyResponse, cscg
from .linkmodel import Grouping, LinkParams, equal_power
from .rng import as_generator

__all__ = [
    "TxBlock",
    "PaprStats",
    "mapping_matrix",
    "modulate",
    "add_cp",
    "remove_cp",
    "apply_channel",
    "mmse_fde",
    "mmse_coefficients",
    "measure_sinr_empirical",
    "papr_of_block",
    "rrc_frequency_response",
    "synthesize_shaped",
    "qam_constellation",
    "qpsk",
]


@dataclass(frozen=True)
class TxBlock:
    symbols: tuple
    spectrum: np.ndarray
    time_signal: np.ndarray
    cp_len: int = 0

    @property
    def cp_signal(self) -> np.ndarray:
        return add_cp(self.time_signal, self.cp_len)


@dataclass(frozen=True)
class PaprStats:
    papr: np.ndarray  # linear, one per block

    @property
    def n_blocks(self) -> int:
        return self.papr.size

    @property
    def mean_papr(self) -> float:
        return float(np.mean(self.papr))

    @property
    def mean_papr_db(self) -> float:
        return float(10 * np.log10(self.mean_papr))

    @property
    def papr_db(self) -> np.ndarray:
        return 10 * np.log10(self.papr)


def mapping_matrix(g: Grouping, k: int) -> np.ndarray:
    """``N x M_k`` 0/1 matrix placing the j-th spread symbol on the j-th member subcarrier."""
    members = g.members(k)
    a = np.zeros((g.n_subcarriers, members.size), dtype=int)
    a[members, np.arange(members.size)] = 1
    return a


def _check_symbols(g, symbols, batched):
    if len(symbols) != g.n_groups:
        raise ValueError(f"expected symbols for {g.n_groups} groups, got {len(symbols)}")
    sizes = g.group_sizes
    out = []
    for k, x in enumerate(symbols):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-1] != sizes[k] or (x.ndim != (2 if batched else 1)):
            raise ValueError(f"group {k + 1} expects {sizes[k]} symbols, got shape {x.shape}")
        out.append(x)
    return out


def _spectrum_batch(g: Grouping, symbols, p: float) -> np.ndarray:
    # symbols: list of (B, M_k) arrays -> (B, N) occupied spectrum
    n_blocks = symbols[0].shape[0]
    spec = np.zeros((n_blocks, g.n_subcarriers), dtype=np.complex128)
    for k, x in enumerate(symbols, start=1):
        spec[:, g.members(k)] = np.sqrt(p) * np.fft.fft(x, axis=-1, norm="ortho")
    return spec


def modulate(g: Grouping, symbols, p: float, cp_len: int = 0) -> TxBlock:
    """One FMG-SC block ``sum_k F_N^H A_k sqrt(p) F_{M_k} x_k``."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    symbols = _check_symbols(g, symbols, batched=False)
    spec = _spectrum_batch(g, [x[None, :] for x in symbols], p)[0]
    x_t = np.fft.ifft(spec, norm="ortho")
    if not 0 <= cp_len <= g.n_subcarriers:
        raise ValueError(f"cp_len must lie in 0..N, got {cp_len}")
    return TxBlock(tuple(symbols), spec, x_t, cp_len)


def add_cp(x, cp_len: int) -> np.ndarray:
    x = np.asarray(x)
    if cp_len < 0 or cp_len > x.shape[-1]:
        raise ValueError(f"cp_len must lie in 0..{x.shape[-1]}, got {cp_len}")
    if cp_len == 0:
        return x.copy()
    return np.concatenate([x[..., -cp_len:], x], axis=-1)


def remove_cp(samples, cp_len: int) -> np.ndarray:
    samples = np.asarray(samples)
    if cp_len < 0 or cp_len > samples.shape[-1] // 2:
        raise ValueError(f"cp_len {cp_len} is too long for {samples.shape[-1]} samples")
    return samples[..., cp_len:].copy()


def apply_channel(tx: TxBlock, ch: ChannelRealization, noise_var: float, rng=None) -> np.ndarray:
    """Transmit ``tx`` with its CP through the multipath channel, add noise, strip the CP."""
    if tx.cp_len < ch.num_taps - 1:
        raise ValueError(f"cyclic prefix of {tx.cp_len} is shorter than the channel memory "
                         f"({ch.num_taps - 1})")
    n = tx.time_signal.size
    rx = np.convolve(tx.cp_signal, ch.taps)[tx.cp_len:tx.cp_len + n]
    if noise_var > 0:
        rx = rx + cscg(as_generator(rng), n, noise_var)
    return rx


def mmse_coefficients(gains, p: float, noise_var: float) -> np.ndarray:
    """Diagonal MMSE-FDE taps ``sqrt(p) h* / (p |h|^2 + sigma^2)``."""
    gains = np.asarray(gains)
    return np.sqrt(p) * np.conj(gains) / (p * np.abs(gains) ** 2 + noise_var)


def _equalize_batch(y_spec, g: Grouping, gains, p, noise_var):
    t = mmse_coefficients(gains, p, noise_var)
    z = y_spec * t
    return [np.fft.ifft(z[:, g.members(k)], axis=-1, norm="ortho") for k in range(1, g.n_groups + 1)]


def mmse_fde(y, g: Grouping, fr: FrequencyResponse, p: float) -> list:
    """Per-group equalized symbol estimates ``F_{M_k}^H A_k^H T F_N y``."""
    y = check_complex_vector(y, "y")
    if y.size != g.n_subcarriers:
        raise ValueError("received block length differs from N")
    out = _equalize_batch(np.fft.fft(y, norm="ortho")[None, :], g, fr.gains, p, fr.noise_var)
    return [v[0] for v in out]


def qpsk(rng, shape) -> np.ndarray:
    """Unit-energy QPSK symbols."""
    bits = rng.integers(0, 2, size=(2,) + tuple(np.atleast_1d(shape)))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def measure_sinr_empirical(g: Grouping, fr: FrequencyResponse, params: LinkParams,
                           num_blocks: int, rng=None, batch_size: int = 2000,
                           gain: str = "equalizer") -> np.ndarray:
    """Monte-Carlo output SINR of every group through the full transceiver.

    The equalizer output is split as ``y_i = a x_i + e_i`` and the SINR is
    ``|a|^2 / E|y_i - a x_i|^2``, pooled over blocks and symbol positions.

    Parameters
    ----------
    gain : {"equalizer", "fitted"}
        ``"equalizer"`` takes the signal gain ``a`` from the receiver's own
        equalizer taps (the mean of ``t_n h_n sqrt(p)`` over the group) and
        measures only the distortion-plus-noise power. ``"fitted"`` estimates
        ``a = E[y conj(x)]`` from the data as well; its relative standard error
        on ``|a|^2`` is about ``2 / sqrt(num_blocks * M * SINR)``, which is
        loose for small groups at low SINR.
    """
    if num_blocks < 1:
        raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")
    if gain not in ("equalizer", "fitted"):
        raise ValueError(f"gain must be 'equalizer' or 'fitted', got {gain!r}")
    rng = as_generator(rng)
    p = equal_power(g, params)
    gains = fr.gains
    sizes = g.group_sizes
    taps = mmse_coefficients(gains, p, fr.noise_var)
    a_eq = np.array([np.mean(taps[g.members(k)] * gains[g.members(k)]) * np.sqrt(p)
                     for k in range(1, g.n_groups + 1)])
    cross = np.zeros(g.n_groups, dtype=np.complex128)
    out_pow = np.zeros(g.n_groups)
    sym_pow = np.zeros(g.n_groups)
    err_pow = np.zeros(g.n_groups)
    count = 0
    while count < num_blocks:
        b = min(batch_size, num_blocks - count)
        symbols = [qpsk(rng, (b, int(m))) for m in sizes]
        spec = _spectrum_batch(g, symbols, p)
        noise = cscg(rng, spec.shape, fr.noise_var)
        # circulant channel: per-bin multiplication, noise is white in either domain
        y_spec = gains * spec + noise
        est = _equalize_batch(y_spec, g, gains, p, fr.noise_var)
        for k in range(g.n_groups):
            cross[k] += np.sum(est[k] * np.conj(symbols[k]))
            out_pow[k] += np.sum(np.abs(est[k]) ** 2)
            sym_pow[k] += np.sum(np.abs(symbols[k]) ** 2)
            err_pow[k] += np.sum(np.abs(est[k] - a_eq[k] * symbols[k]) ** 2)
        count += b
    n_samples = sizes * num_blocks
    if gain == "equalizer":
        return np.abs(a_eq) ** 2 / (err_pow / n_samples)
    a = cross / sym_pow
    # E|y - a x|^2 = E|y|^2 - |a|^2 E|x|^2 for the least-squares gain a
    err = out_pow / n_samples - np.abs(a) ** 2 * sym_pow / n_samples
    return np.abs(a) ** 2 / err


def papr_of_block(samples) -> float:
    """Peak-to-average power ratio (linear)."""
    s = np.abs(check_complex_vector(samples, "samples")) ** 2
    mean = np.mean(s)
    if mean == 0:
        raise ValueError("PAPR of an all-zero block is undefined")
    return float(max(np.max(s) / mean, 1.0))


def rrc_frequency_response(f, rolloff: float) -> np.ndarray:
    """Root-raised-cosine amplitude response at frequency ``f`` (in units of the symbol rate).

    With ``rolloff == 0`` the response is the ideal brick wall over the
    half-open band ``[-1/2, 1/2)`` so that exactly ``N`` DFT bins are kept.
    """
    f = np.asarray(f, dtype=float)
    if rolloff == 0:
        return ((f >= -0.5) & (f < 0.5)).astype(float)
    af = np.abs(f)
    lo, hi = (1 - rolloff) / 2, (1 + rolloff) / 2
    out = np.zeros_like(af)
    out[af <= lo] = 1.0
    mid = (af > lo) & (af <= hi)
    out[mid] = np.sqrt(0.5 * (1 + np.cos(np.pi / rolloff * (af[mid] - lo))))
    return out


def synthesize_shaped(blocks, oversample: int = 4, rolloff: float = 0.1):
    """Oversampled, RRC-shaped version of each block and its PAPR statistics.

    Each ``N``-sample block is treated as one period of a symbol-rate
    sequence: its spectrum is extended periodically, weighted by the RRC
    response over ``|f| <= (1 + rolloff) / 2`` and folded onto an
    ``oversample * N``-point grid before the inverse transform.

    Parameters
    ----------
    blocks : array_like, shape (B, N) or (N,)
        Time-domain blocks without cyclic prefix.

    Returns
    -------
    samples : np.ndarray, shape (B, oversample * N)
    stats : PaprStats
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError(f"oversample must be a positive integer, got {oversample}")
    if not 0 <= rolloff <= 1:
        raise ValueError(f"rolloff must lie in [0, 1], got {rolloff}")
    x = np.atleast_2d(np.asarray(blocks, dtype=np.complex128))
    n = x.shape[-1]
    size = oversample * n
    spec = np.fft.fft(x, axis=-1)
    half = int(np.ceil((1 + rolloff) * n / 2))
    m = np.arange(-half, half + 1)
    w = rrc_frequency_response(m / n, rolloff)
    keep = w > 0
    m, w = m[keep], w[keep]
    shaped = np.zeros((x.shape[0], size), dtype=np.complex128)
    np.add.at(shaped, (slice(None), m % size), spec[:, m % n] * w)
    samples = np.fft.ifft(shaped, axis=-1) * oversample
    power = np.abs(samples) ** 2
    mean = power.mean(axis=-1)
    if np.any(mean == 0):
        raise ValueError("PAPR of an all-zero block is undefined")
    papr = np.maximum(power.max(axis=-1) / mean, 1.0)
    return samples, PaprStats(papr)


def _qam_points(order_log2: int) -> np.ndarray:
    if order_log2 % 2 == 0:
        side = 2 ** (order_log2 // 2)
        levels = np.arange(-(side - 1), side, 2)
        i, q = np.meshgrid(levels, levels)
        return (i + 1j * q).ravel()
    if order_log2 == 3:
        i, q = np.meshgrid(np.arange(-3, 4, 2), [-1, 1])
        return (i + 1j * q).ravel()
    # cross constellation: 6s x 6s square minus an s x s square in each corner
    s = 2 ** ((order_log2 - 5) // 2)
    levels = np.arange(-(6 * s - 1), 6 * s, 2)
    i, q = np.meshgrid(levels, levels)
    corner = (np.abs(i) > 4 * s) & (np.abs(q) > 4 * s)
    return (i + 1j * q)[~corner].ravel()


def qam_constellation(bits_per_symbol: float, granularity: float = 1 / 3) -> np.ndarray:
    """Unit-energy M-QAM able to carry ``bits_per_symbol`` loaded bits.

    The load is first snapped to the nearest multiple of ``granularity``,
    then rounded up to a whole number of bits (at least 2). Even bit counts
    give square QAM, 3 bits a 4x2 rectangular grid, and larger odd counts a
    cross constellation.
    """
    if granularity:
        bits_per_symbol = round(bits_per_symbol / granularity) * granularity
    m = max(2, int(np.ceil(bits_per_symbol - 1e-9)))
    pts = _qam_points(m).astype(np.complex128)
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))
