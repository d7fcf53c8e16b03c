"""Frequency-selective block-fading channel with an exponential power-delay profile."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_complex_vector
from .rng import as_generator

__all__ = [
    "PowerDelayProfile",
    "ChannelRealization",
    "FrequencyResponse",
    "sample_channel",
    "frequency_response",
    "subcarrier_gain_ratios",
    "cscg",
]


def cscg(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class PowerDelayProfile:
    """Exponential PDP over symbol-spaced taps ``0..num_taps-1``.

    ``tap_variances[l]`` is proportional to ``exp(-decay_rate * l)`` and the
    variances sum to one.
    """

    num_taps: int = 8
    decay_rate: float = 1.0
    tap_variances: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.num_taps) != self.num_taps or self.num_taps < 1:
            raise ValueError(f"num_taps must be a positive integer, got {self.num_taps}")
        if not np.isfinite(self.decay_rate) or self.decay_rate < 0:
            raise ValueError(f"decay_rate must be a nonnegative real, got {self.decay_rate}")
        w = np.exp(-float(self.decay_rate) * np.arange(self.num_taps))
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "tap_variances", w)


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray

    def __post_init__(self):
        taps = check_complex_vector(self.taps, "taps").copy()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def num_taps(self) -> int:
        return self.taps.size


@dataclass(frozen=True)
class FrequencyResponse:
    """Per-subcarrier complex gains ``h_n`` together with the noise variance."""

    gains: np.ndarray
    noise_var: float

    def __post_init__(self):
        gains = check_complex_vector(self.gains, "gains").copy()
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        if not (np.isfinite(self.noise_var) and self.noise_var > 0):
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")

    @property
    def n_subcarriers(self) -> int:
        return self.gains.size


def sample_channel(pdp: PowerDelayProfile, rng=None) -> ChannelRealization:
    """Draw independent CSCG taps with variances given by ``pdp``."""
    rng = as_generator(rng)
    return ChannelRealization(cscg(rng, pdp.num_taps, pdp.tap_variances))


def frequency_response(ch: ChannelRealization, n_subcarriers: int, noise_var: float) -> FrequencyResponse:
    """``h_n = sum_l taps[l] exp(-j 2 pi n l / N)``.

    These are the eigenvalues of the circulant channel matrix under the
    unitary DFT, i.e. the unnormalised DFT of the zero-padded taps.
    """
    if n_subcarriers < ch.num_taps:
        raise ValueError(f"N={n_subcarriers} is shorter than the channel ({ch.num_taps} taps)")
    return FrequencyResponse(np.fft.fft(ch.taps, n=n_subcarriers), noise_var)


def subcarrier_gain_ratios(fr: FrequencyResponse) -> np.ndarray:
    """``|h_n|^2 / sigma^2``; multiply by the allocated power to get the subcarrier SNR."""
    return np.abs(fr.gains) ** 2 / fr.noise_var
