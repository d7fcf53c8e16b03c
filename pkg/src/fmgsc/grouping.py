"""Subcarrier-to-group mapping optimizers.

All optimizers maximize the equal-power FMG-SC sum rate
(:func:`fmgsc.linkmodel.sum_rate`). The set-partitioning methods only search
groupings that are contiguous bands of the SNR-sorted subcarriers, described
by ``K`` bar positions ``b_1 < ... < b_K`` in ``0..N-1``: sorted positions
``[0, b_1)`` are unused and positions ``[b_k, b_{k+1})`` form group ``k``
(with ``b_{K+1} = N``).
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ._validation import SearchSpaceTooLargeError, check_real_vector
from .channel import FrequencyResponse, subcarrier_gain_ratios
from .linkmodel import GroupMetrics, Grouping, LinkParams, sum_rate
from .rng import as_generator

__all__ = [
    "SortedSubcarriers",
    "BarPlacement",
    "OptimizerResult",
    "sort_subcarriers",
    "bars_to_grouping",
    "exhaustive_search",
    "spos",
    "spgs",
    "spgs_initial_bars",
    "ep_us",
    "ep_ss",
    "equal_band_sizes",
    "water_filling",
    "bit_loading",
    "wf_ofdm_rate",
    "scfde_rate",
    "ES_MAX_SUBCARRIERS",
]

ES_MAX_SUBCARRIERS = 14

# candidates whose fast-path rate is within this relative distance of the best
# are re-scored with the reference objective before the argmax is taken
_NEAR_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SortedSubcarriers:
    """Subcarrier indices sorted by increasing SNR, and the sorted values."""

    order: np.ndarray
    values: np.ndarray

    @property
    def n_subcarriers(self) -> int:
        return self.order.size


@dataclass(frozen=True)
class BarPlacement:
    bars: tuple
    n_subcarriers: int

    def __post_init__(self):
        bars = tuple(int(b) for b in self.bars)
        if len(bars) < 1:
            raise ValueError("at least one bar is required")
        if bars[0] < 0 or bars[-1] > self.n_subcarriers - 1:
            raise ValueError(f"bars must lie in 0..{self.n_subcarriers - 1}, got {bars}")
        if any(b2 <= b1 for b1, b2 in zip(bars, bars[1:])):
            raise ValueError(f"bars must be strictly increasing, got {bars}")
        object.__setattr__(self, "bars", bars)

    @property
    def n_groups(self) -> int:
        return len(self.bars)

    @property
    def band_sizes(self) -> tuple:
        """``(|S_0|, M_1, ..., M_K)``."""
        edges = (0,) + self.bars + (self.n_subcarriers,)
        return tuple(b - a for a, b in zip(edges, edges[1:]))


@dataclass(frozen=True)
class OptimizerResult:
    grouping: Grouping
    metrics: GroupMetrics
    evaluations: int
    iterations: int = 0
    bars: BarPlacement | None = None
    history: tuple = field(default=(), repr=False)

    @property
    def sum_rate(self) -> float:
        return self.metrics.sum_rate


def sort_subcarriers(ratios) -> SortedSubcarriers:
    """Stable ascending sort; ties keep ascending original index."""
    ratios = check_real_vector(ratios, "ratios")
    order = np.argsort(ratios, kind="stable")
    return SortedSubcarriers(order=order, values=ratios[order])


def bars_to_grouping(bars: BarPlacement, sorted_sc: SortedSubcarriers) -> Grouping:
    if bars.n_subcarriers != sorted_sc.n_subcarriers:
        raise ValueError("bar placement and sorted subcarriers disagree on N")
    sorted_labels = np.repeat(np.arange(bars.n_groups + 1), bars.band_sizes)
    labels = np.empty_like(sorted_labels)
    labels[sorted_sc.order] = sorted_labels
    return Grouping(labels, bars.n_groups)


def _check_inputs(fr: FrequencyResponse, params: LinkParams):
    if fr.n_subcarriers != params.n_subcarriers:
        raise ValueError(f"frequency response has {fr.n_subcarriers} subcarriers, "
                         f"params expect {params.n_subcarriers}")
    if params.n_groups > params.n_subcarriers:
        raise ValueError("K > N is infeasible")


def _finish(labels_or_grouping, fr, params, evaluations, iterations=0, bars=None, history=()):
    g = labels_or_grouping
    if not isinstance(g, Grouping):
        g = Grouping(g, params.n_groups)
    return OptimizerResult(grouping=g, metrics=sum_rate(g, fr, params), evaluations=evaluations,
                           iterations=iterations, bars=bars, history=tuple(history))


def _rates_from_sums(mse_sums, sizes, n, gap):
    # mse_sums / sizes: (C, K); returns (C,) sum rates
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.maximum(sizes / mse_sums - 1.0, 0.0)
    return np.sum(sizes / n * np.log2(1.0 + sinr / gap), axis=1)


class _BarObjective:
    """Vectorized sum rate of bar placements over one set of sorted ratios."""

    def __init__(self, sorted_values, params: LinkParams):
        n = sorted_values.size
        self.n = n
        self.gap = params.gap
        used = n - np.arange(n)  # used subcarriers for b_1 = 0..N-1
        p = params.total_power / used
        inv = 1.0 / (1.0 + p[:, None] * sorted_values[None, :])
        self.table = np.zeros((n, n + 1))
        np.cumsum(inv, axis=1, out=self.table[:, 1:])

    def __call__(self, bars) -> np.ndarray:
        bars = np.atleast_2d(np.asarray(bars, dtype=np.intp))
        edges = np.concatenate([bars, np.full((bars.shape[0], 1), self.n)], axis=1)
        rows = self.table[bars[:, 0]]
        cum = np.take_along_axis(rows, edges, axis=1)
        sums = np.diff(cum, axis=1)
        sizes = np.diff(edges, axis=1).astype(float)
        return _rates_from_sums(sums, sizes, self.n, self.gap)


def _reference_argmax(fast_values, make_grouping, fr, params):
    """Index of the best candidate under the reference objective.

    Only candidates within the near-tie window of the fast-path maximum are
    re-scored; the first (lowest index) maximizer wins.
    """
    best = np.max(fast_values)
    window = _NEAR_TIE_RTOL * max(abs(best), 1e-300)
    near = np.flatnonzero(fast_values >= best - window)
    if near.size == 1:
        return int(near[0])
    ref = [sum_rate(make_grouping(int(i)), fr, params).sum_rate for i in near]
    return int(near[int(np.argmax(ref))])


@lru_cache(maxsize=64)
def _bar_candidates(n: int, k: int, pinned: bool) -> np.ndarray:
    if pinned:
        rest = itertools.combinations(range(1, n), k - 1)
        combos = [(0,) + c for c in rest]
    else:
        combos = list(itertools.combinations(range(n), k))
    arr = np.array(combos, dtype=np.intp).reshape(len(combos), k)
    arr.setflags(write=False)
    return arr


def spos(fr: FrequencyResponse, params: LinkParams, allow_null: bool = True) -> OptimizerResult:
    """Set-partitioning optimal search over every bar placement.

    With ``allow_null=False`` the first bar is pinned to 0 so that no
    subcarrier is left unused, and ``C(N-1, K-1)`` placements are scanned
    instead of ``C(N, K)``. Ties go to the lexicographically smallest bars.
    """
    _check_inputs(fr, params)
    n, k = params.n_subcarriers, params.n_groups
    sorted_sc = sort_subcarriers(subcarrier_gain_ratios(fr))
    candidates = _bar_candidates(n, k, not allow_null)
    values = _BarObjective(sorted_sc.values, params)(candidates)

    def make(i):
        return bars_to_grouping(BarPlacement(candidates[i], n), sorted_sc)

    i = _reference_argmax(values, make, fr, params)
    bars = BarPlacement(candidates[i], n)
    return _finish(bars_to_grouping(bars, sorted_sc), fr, params,
                   evaluations=len(candidates), bars=bars)


def equal_band_sizes(n: int, k: int) -> np.ndarray:
    """Sizes of ``k`` contiguous bands; the first ``n mod k`` get one extra."""
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    return sizes


def spgs_initial_bars(n: int, k: int, allow_null: bool = True) -> tuple:
    """Starting bars for SPGS.

    With nulling allowed the bars split the sorted subcarriers evenly,
    ``floor(N k / (K + 1))`` for k = 1..K. Without nulling the first bar is
    pinned to 0 and the rest reproduce the equal partition of the sorted
    subcarriers into ``K`` bands (the EP-SS grouping).
    """
    if allow_null:
        return tuple((n * i) // (k + 1) for i in range(1, k + 1))
    return tuple(int(b) for b in np.concatenate(([0], np.cumsum(equal_band_sizes(n, k))[:-1])))


def _coordinate_ascent(objective, bars, n, first_free, max_outer):
    """Move one bar at a time by at most one slot until nothing changes."""
    bars = list(bars)
    k = len(bars)
    current = float(objective([bars])[0])
    history = [current]
    evaluations = 1
    outer = 0
    while outer < max_outer:
        outer += 1
        moved = False
        for i in range(first_free, k):
            lo = bars[i - 1] + 1 if i > 0 else 0
            hi = bars[i + 1] - 1 if i < k - 1 else n - 1
            steps = [d for d in (-1, 1) if lo <= bars[i] + d <= hi]
            if not steps:
                continue
            trial = np.array([bars] * len(steps))
            trial[:, i] += steps
            values = objective(trial)
            evaluations += len(steps)
            j = int(np.argmax(values))
            # strict improvement only: delta=0 wins ties, then -1 before +1
            if values[j] > current:
                bars[i] += steps[j]
                current = float(values[j])
                moved = True
        history.append(current)
        if not moved:
            break
    return tuple(bars), current, evaluations, outer, history


def spgs(fr: FrequencyResponse, params: LinkParams, allow_null: bool = True,
         n_restarts: int = 1, max_outer: int | None = None, random_state=None) -> OptimizerResult:
    """Set-partitioning gradient-based search.

    Each outer iteration visits ``b_1, ..., b_K`` in turn and moves each bar by
    at most one position, keeping it inside ``[b_{k-1} + 1, b_{k+1} - 1]``.
    The search stops after an outer iteration that moves nothing, or after
    ``max_outer`` (default ``10 N``) outer iterations.

    ``n_restarts > 1`` adds random starting placements drawn from
    ``random_state``; the best converged point is kept. ``history`` holds the
    objective after every outer iteration of the winning start.
    """
    _check_inputs(fr, params)
    if n_restarts < 1:
        raise ValueError(f"n_restarts must be >= 1, got {n_restarts}")
    n, k = params.n_subcarriers, params.n_groups
    max_outer = 10 * n if max_outer is None else max_outer
    sorted_sc = sort_subcarriers(subcarrier_gain_ratios(fr))
    objective = _BarObjective(sorted_sc.values, params)

    starts = [spgs_initial_bars(n, k, allow_null)]
    if n_restarts > 1:
        rng = as_generator(random_state)
        for _ in range(n_restarts - 1):
            if allow_null:
                starts.append(tuple(np.sort(rng.choice(n, size=k, replace=False))))
            else:
                rest = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
                starts.append((0,) + tuple(rest))

    best = None
    total_evals = 0
    for start in starts:
        run = _coordinate_ascent(objective, start, n, 0 if allow_null else 1, max_outer)
        total_evals += run[2]
        if best is None or run[1] > best[1]:
            best = run
    bars_t, _, _, outer, history = best
    bars = BarPlacement(bars_t, n)
    return _finish(bars_to_grouping(bars, sorted_sc), fr, params, evaluations=total_evals,
                   iterations=outer, bars=bars, history=history)


def _assignment_chunk(start, stop, n, base, offset):
    idx = np.arange(start, stop, dtype=np.int64)
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % base + offset


def exhaustive_search(fr: FrequencyResponse, params: LinkParams, allow_null: bool = True,
                      max_subcarriers: int = ES_MAX_SUBCARRIERS,
                      chunk_size: int = 1 << 15) -> OptimizerResult:
    """Global optimum over all ``(K+1)^N`` (or ``K^N``) label assignments.

    Assignments with an empty group are skipped. Assignments are visited in
    lexicographic order of the label vector and the first maximizer wins.
    """
    _check_inputs(fr, params)
    n, k = params.n_subcarriers, params.n_groups
    if n > max_subcarriers:
        raise SearchSpaceTooLargeError(
            f"exhaustive search over N={n} subcarriers exceeds the cap of {max_subcarriers}")
    ratios = subcarrier_gain_ratios(fr)
    base, offset = (k + 1, 0) if allow_null else (k, 1)
    total = base ** n

    best_val = -np.inf
    near = []  # (labels, fast value) within the near-tie window, lexicographic order
    evaluations = 0
    groups = np.arange(1, k + 1)
    for start in range(0, total, chunk_size):
        labels = _assignment_chunk(start, min(start + chunk_size, total), n, base, offset)
        member = labels[:, None, :] == groups[None, :, None]  # (C, K, N)
        sizes = member.sum(axis=2)
        valid = np.all(sizes > 0, axis=1)
        if not np.any(valid):
            continue
        labels, member, sizes = labels[valid], member[valid], sizes[valid]
        evaluations += labels.shape[0]
        p = params.total_power / sizes.sum(axis=1)
        inv = 1.0 / (1.0 + p[:, None] * ratios[None, :])
        sums = np.einsum("ckn,cn->ck", member, inv)
        values = _rates_from_sums(sums, sizes.astype(float), n, params.gap)
        if values.max() > best_val:
            best_val = float(values.max())
            window = best_val - _NEAR_TIE_RTOL * max(abs(best_val), 1e-300)
            near = [item for item in near if item[1] >= window]
        window = best_val - _NEAR_TIE_RTOL * max(abs(best_val), 1e-300)
        near.extend((labels[i].copy(), float(values[i])) for i in np.flatnonzero(values >= window))
    if not near:
        raise ValueError("no feasible assignment")
    i = _reference_argmax(np.array([v for _, v in near]),
                          lambda j: Grouping(near[j][0], k), fr, params)
    return _finish(near[i][0], fr, params, evaluations=evaluations)


def _equal_partition(order, fr, params):
    n, k = params.n_subcarriers, params.n_groups
    sorted_labels = np.repeat(np.arange(1, k + 1), equal_band_sizes(n, k))
    labels = np.empty(n, dtype=np.intp)
    labels[order] = sorted_labels
    return _finish(labels, fr, params, evaluations=1)


def ep_us(fr: FrequencyResponse, params: LinkParams) -> OptimizerResult:
    """K contiguous bands in original subcarrier order, no nulling."""
    _check_inputs(fr, params)
    return _equal_partition(np.arange(params.n_subcarriers), fr, params)


def ep_ss(fr: FrequencyResponse, params: LinkParams) -> OptimizerResult:
    """K contiguous bands of the SNR-sorted subcarriers (weakest first), no nulling."""
    _check_inputs(fr, params)
    return _equal_partition(sort_subcarriers(subcarrier_gain_ratios(fr)).order, fr, params)


def scfde_rate(fr: FrequencyResponse, params: LinkParams) -> float:
    """Rate of plain SC-FDE: one group over every subcarrier."""
    return sum_rate(Grouping.single_group(fr.n_subcarriers), fr,
                    params.with_groups(1)).sum_rate


def water_filling(ratios, total_power: float, gap: float = 1.0) -> np.ndarray:
    """Gap-adjusted water-filling powers ``max(0, mu - gap / ratio_n)``.

    The water level is found by root bracketing so that the powers spend the
    whole budget (relative tolerance well below 1e-10).
    """
    ratios = check_real_vector(ratios, "ratios", nonnegative=True)
    powers = np.zeros_like(ratios)
    active = ratios > 0
    if not np.any(active) or total_power <= 0:
        return powers
    floor = gap / ratios[active]

    def excess(mu):
        return np.sum(np.maximum(0.0, mu - floor)) - total_power

    lo = float(floor.min())
    hi = lo + total_power
    mu = brentq(excess, lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    powers[active] = np.maximum(0.0, mu - floor)
    return powers


def bit_loading(ratios, total_power: float, gap: float = 1.0, granularity: float = 1 / 3):
    """Greedy incremental bit loading at fixed bit granularity.

    Repeatedly grants the ``granularity``-bit increment with the smallest
    power cost ``(2^(b+g) - 2^b) * gap / ratio`` until the next cheapest one
    no longer fits the budget.

    Returns
    -------
    bits, powers : np.ndarray
        Loaded bits per subcarrier (multiples of ``granularity``) and the
        power each subcarrier needs, ``(2^bits - 1) * gap / ratio``.
    """
    ratios = check_real_vector(ratios, "ratios", nonnegative=True)
    if not granularity > 0:
        raise ValueError(f"granularity must be positive, got {granularity}")
    n = ratios.size
    steps = np.zeros(n, dtype=np.int64)

    def cost(i, s):
        return (2.0 ** ((s + 1) * granularity) - 2.0 ** (s * granularity)) * gap / ratios[i]

    heap = [(cost(i, 0), i) for i in range(n) if ratios[i] > 0]
    heapq.heapify(heap)
    budget = float(total_power)
    while heap:
        c, i = heap[0]
        if c > budget:
            break
        budget -= c
        steps[i] += 1
        heapq.heapreplace(heap, (cost(i, steps[i]), i))
    bits = steps * granularity
    powers = np.zeros(n)
    on = steps > 0
    powers[on] = (2.0 ** bits[on] - 1.0) * gap / ratios[on]
    return bits, powers


def wf_ofdm_rate(fr: FrequencyResponse, params: LinkParams, granularity: float | None = None) -> float:
    """OFDM rate with water-filling power (and optionally discrete bit) allocation."""
    if fr.n_subcarriers != params.n_subcarriers:
        raise ValueError("frequency response and params disagree on N")
    ratios = subcarrier_gain_ratios(fr)
    n = params.n_subcarriers
    if granularity is None:
        powers = water_filling(ratios, params.total_power, params.gap)
        return math.fsum(np.log2(1.0 + powers * ratios / params.gap).tolist()) / n
    bits, _ = bit_loading(ratios, params.total_power, params.gap, granularity)
    return float(np.sum(bits)) / n
