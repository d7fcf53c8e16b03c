"""Analytic FMG-SC link abstraction.

Every group is an SC-FDE link over its own subcarrier subset with an MMSE
frequency-domain equalizer, so ``1 + sinr_k`` is the harmonic mean of
``1 + p |h_n|^2 / sigma^2`` over the group, and the group carries
``M_k / N * log2(1 + sinr_k / gap)`` bps/Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import InvalidGroupingError, check_real_vector
from .channel import FrequencyResponse, subcarrier_gain_ratios

__all__ = [
    "LinkParams",
    "Grouping",
    "GroupMetrics",
    "db_to_linear",
    "equal_power",
    "group_sinr",
    "group_rate",
    "sum_rate",
    "sinr_upper_bound",
]


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class LinkParams:
    """``gap`` is linear (>= 1); convert from dB with :func:`db_to_linear`."""

    n_subcarriers: int
    n_groups: int
    total_power: float
    noise_var: float = 1.0
    gap: float = 1.0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        if not 1 <= self.n_groups <= self.n_subcarriers:
            raise ValueError(f"n_groups must satisfy 1 <= K <= N, got K={self.n_groups}, "
                             f"N={self.n_subcarriers}")
        if not (self.total_power > 0 and np.isfinite(self.total_power)):
            raise ValueError(f"total_power must be positive, got {self.total_power}")
        if not (self.noise_var > 0 and np.isfinite(self.noise_var)):
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if not self.gap >= 1:
            raise ValueError(f"gap must be >= 1 (linear), got {self.gap}")

    @classmethod
    def from_snr_db(cls, n_subcarriers, n_groups, snr_db, gap_db=0.0, noise_var=1.0):
        """Parameters for ``SNR = P / (N sigma^2)``."""
        return cls(n_subcarriers, n_groups,
                   total_power=n_subcarriers * noise_var * db_to_linear(snr_db),
                   noise_var=noise_var, gap=db_to_linear(gap_db))

    def with_groups(self, n_groups: int) -> "LinkParams":
        return LinkParams(self.n_subcarriers, n_groups, self.total_power, self.noise_var, self.gap)


@dataclass(frozen=True)
class Grouping:
    """Subcarrier-to-group assignment.

    ``labels[n]`` is the group of subcarrier ``n`` (1..K) or 0 when the
    subcarrier is left unused. Every group 1..K must be nonempty.
    """

    labels: np.ndarray
    n_groups: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidGroupingError("labels must be a nonempty 1-D array")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InvalidGroupingError("labels must be integers")
        labels = labels.astype(np.intp).copy()
        if self.n_groups < 1:
            raise InvalidGroupingError(f"n_groups must be >= 1, got {self.n_groups}")
        if labels.min() < 0 or labels.max() > self.n_groups:
            raise InvalidGroupingError(f"labels must lie in 0..{self.n_groups}")
        sizes = np.bincount(labels, minlength=self.n_groups + 1)[1:]
        if np.any(sizes == 0):
            empty = [int(k) + 1 for k in np.flatnonzero(sizes == 0)]
            raise InvalidGroupingError(f"groups {empty} are empty")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_subcarriers(self) -> int:
        return self.labels.size

    @property
    def group_sizes(self) -> np.ndarray:
        """``M_k`` for k = 1..K."""
        return np.bincount(self.labels, minlength=self.n_groups + 1)[1:]

    @property
    def n_used(self) -> int:
        return int(np.count_nonzero(self.labels))

    def members(self, k: int) -> np.ndarray:
        """Subcarrier indices of group ``k`` in ascending order."""
        return np.flatnonzero(self.labels == k)

    @property
    def unused(self) -> np.ndarray:
        return self.members(0)

    @classmethod
    def single_group(cls, n_subcarriers: int) -> "Grouping":
        return cls(np.ones(n_subcarriers, dtype=np.intp), 1)

    @classmethod
    def per_subcarrier(cls, n_subcarriers: int) -> "Grouping":
        """Every subcarrier its own group (OFDM)."""
        return cls(np.arange(1, n_subcarriers + 1), n_subcarriers)


@dataclass(frozen=True)
class GroupMetrics:
    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float
    power: float = field(default=float("nan"))


def equal_power(g: Grouping, params: LinkParams) -> float:
    """Per-subcarrier power ``P / (number of used subcarriers)``."""
    used = g.n_used
    if used == 0:
        raise InvalidGroupingError("no subcarrier is in use")
    return params.total_power / used


def _sinr_from_ratios(gain_ratios: np.ndarray, p: float) -> float:
    # fsum makes the result independent of member order
    inv = 1.0 / (1.0 + p * gain_ratios)
    mean_mse = math.fsum(inv.tolist()) / gain_ratios.size
    return max(1.0 / mean_mse - 1.0, 0.0)


def group_sinr(g: Grouping, k: int, ratios, p: float) -> float:
    """Post-MMSE-FDE SINR of group ``k``.

    Parameters
    ----------
    g : Grouping
    k : int
        Group index in ``1..K``.
    ratios : array_like
        ``|h_n|^2 / sigma^2`` for every subcarrier.
    p : float
        Power per used subcarrier.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    ratios = check_real_vector(ratios, "ratios", nonnegative=True)
    members = g.members(k)
    if members.size == 0:
        raise ValueError(f"group {k} is empty")
    return _sinr_from_ratios(ratios[members], p)


def group_rate(sinr: float, group_size: int, params: LinkParams) -> float:
    if sinr < 0:
        raise ValueError(f"sinr must be nonnegative, got {sinr}")
    return group_size / params.n_subcarriers * math.log2(1.0 + sinr / params.gap)


def sum_rate(g: Grouping, fr: FrequencyResponse, params: LinkParams) -> GroupMetrics:
    """Equal-power sum rate of all groups (bps/Hz), the grouping objective."""
    if g.n_subcarriers != fr.n_subcarriers or g.n_subcarriers != params.n_subcarriers:
        raise ValueError("grouping, frequency response and params disagree on N")
    if fr.noise_var != params.noise_var:
        raise ValueError("frequency response and params disagree on the noise variance")
    p = equal_power(g, params)
    ratios = subcarrier_gain_ratios(fr)
    sizes = g.group_sizes
    sinr = np.empty(g.n_groups)
    rates = np.empty(g.n_groups)
    order = np.argsort(g.labels, kind="stable")
    bounds = np.concatenate(([0], np.cumsum(np.bincount(g.labels, minlength=g.n_groups + 1))))
    for k in range(1, g.n_groups + 1):
        members = order[bounds[k]:bounds[k + 1]]
        sinr[k - 1] = _sinr_from_ratios(ratios[members], p)
        rates[k - 1] = group_rate(sinr[k - 1], int(sizes[k - 1]), params)
    return GroupMetrics(sinr=sinr, rates=rates, sum_rate=math.fsum(rates.tolist()), power=p)


def sinr_upper_bound(group_size: int, min_snr: float) -> float:
    """``M_k (1 + min_snr) - 1``: the harmonic mean is at most M times its smallest term."""
    if group_size < 1:
        raise ValueError(f"group_size must be >= 1, got {group_size}")
    if min_snr < 0:
        raise ValueError(f"min_snr must be nonnegative, got {min_snr}")
    return group_size * (1.0 + min_snr) - 1.0
