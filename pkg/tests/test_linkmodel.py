import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmgsc import InvalidGroupingError
from fmgsc.channel import FrequencyResponse
from fmgsc.linkmodel import (Grouping, LinkParams, equal_power, group_rate, group_sinr, sinr_upper_bound,
                             sum_rate)

from conftest import random_response


def test_link_params_validation():
    with pytest.raises(ValueError):
        LinkParams(4, 0, 1.0)
    with pytest.raises(ValueError):
        LinkParams(4, 5, 1.0)
    with pytest.raises(ValueError):
        LinkParams(4, 1, 1.0, gap=0.5)
    with pytest.raises(ValueError):
        LinkParams(4, 1, -1.0)


def test_from_snr_db():
    p = LinkParams.from_snr_db(64, 2, 10.0, gap_db=4.54)
    assert np.isclose(p.total_power / (64 * p.noise_var), 10.0)
    assert np.isclose(p.gap, 10 ** 0.454)


def test_grouping_validation():
    with pytest.raises(InvalidGroupingError):
        Grouping([1, 1, 0, 0], 2)  # group 2 empty
    with pytest.raises(InvalidGroupingError):
        Grouping([1, 3, 2], 2)
    with pytest.raises(InvalidGroupingError):
        Grouping([-1, 1], 1)
    g = Grouping([0, 2, 1, 2], 2)
    np.testing.assert_array_equal(g.group_sizes, [1, 2])
    np.testing.assert_array_equal(g.members(2), [1, 3])
    assert g.n_used == 3


def test_equal_power():
    params = LinkParams(4, 1, 4.0)
    assert equal_power(Grouping([1, 1, 1, 1], 1), params) == 1.0
    p = equal_power(Grouping([0, 1, 1, 1], 1), params)
    assert p == pytest.approx(4 / 3)
    assert p * 3 == pytest.approx(4.0, abs=0, rel=1e-15)


def test_equal_power_rejects_all_unused():
    g = object.__new__(Grouping)
    object.__setattr__(g, "labels", np.zeros(4, dtype=int))
    object.__setattr__(g, "n_groups", 1)
    with pytest.raises(InvalidGroupingError):
        equal_power(g, LinkParams(4, 1, 4.0))


def test_group_sinr_single_subcarrier():
    g = Grouping([1], 1)
    assert group_sinr(g, 1, [5.0], 1.0) == pytest.approx(5.0, rel=1e-14)


def test_group_sinr_harmonic_mean_example():
    # SNRs {1, 3}: 1 + sinr = HM(2, 4) = 8/3
    g = Grouping([1, 1], 1)
    assert group_sinr(g, 1, [1.0, 3.0], 1.0) == pytest.approx(5 / 3, rel=1e-14)


def test_group_sinr_flat():
    g = Grouping([1, 1, 1, 0], 1)
    assert group_sinr(g, 1, [2.5, 2.5, 2.5, 0.1], 2.0) == pytest.approx(5.0, rel=1e-14)


def test_group_sinr_errors():
    g = Grouping([1, 2], 2)
    with pytest.raises(ValueError):
        group_sinr(g, 3, [1.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        group_sinr(g, 1, [1.0, 1.0], 0.0)


def test_group_rate_examples():
    assert group_rate(3.0, 4, LinkParams(4, 1, 1.0)) == pytest.approx(2.0)
    assert group_rate(0.0, 4, LinkParams(4, 1, 1.0)) == 0.0
    assert group_rate(5 / 3, 2, LinkParams(4, 1, 1.0)) == pytest.approx(0.5 * math.log2(8 / 3))
    assert group_rate(5 / 3, 2, LinkParams(4, 1, 1.0)) == pytest.approx(0.7075187, abs=1e-7)


def test_sum_rate_worked_example():
    fr = FrequencyResponse(np.sqrt([1, 2, 3, 4]).astype(complex), 1.0)
    m = sum_rate(Grouping([0, 1, 1, 1], 1), fr, LinkParams(4, 1, 4.0))
    # p = 4/3, SNRs 8/3, 4, 16/3 -> 1 + sinr = 3 / (3/11 + 1/5 + 3/19)
    hm = 3 / (3 / 11 + 1 / 5 + 3 / 19)
    assert m.sum_rate == pytest.approx(0.75 * math.log2(hm), rel=1e-13)
    assert m.sum_rate == pytest.approx(1.687, abs=1e-3)


def test_sum_rate_scfde_special_case(rng):
    fr = random_response(rng, 32)
    params = LinkParams(32, 1, 32 * 3.0)
    snr = 3.0 * np.abs(fr.gains) ** 2
    hm = 32 / np.sum(1 / (1 + snr))
    expected = math.log2(hm)
    assert sum_rate(Grouping.single_group(32), fr, params).sum_rate == pytest.approx(expected, rel=1e-12)


def test_sum_rate_ofdm_special_case(rng):
    fr = random_response(rng, 32, noise_var=0.5)
    params = LinkParams(32, 32, 64.0, noise_var=0.5)
    expected = np.mean(np.log2(1 + 2.0 * np.abs(fr.gains) ** 2 / 0.5))
    got = sum_rate(Grouping.per_subcarrier(32), fr, params).sum_rate
    assert got == pytest.approx(expected, rel=1e-12)


def test_sum_rate_rejects_mismatch(rng):
    fr = random_response(rng, 8)
    with pytest.raises(ValueError):
        sum_rate(Grouping.single_group(4), fr, LinkParams(4, 1, 1.0))


def test_sinr_upper_bound_examples():
    assert sinr_upper_bound(1, 2.5) == 2.5
    assert sinr_upper_bound(4, 1.0) == 7.0
    with pytest.raises(ValueError):
        sinr_upper_bound(0, 1.0)


snr_lists = st.lists(st.floats(0.0, 1e4, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(snr_lists)
def test_harmonic_mean_identity_and_bounds(snrs):
    snrs = np.array(snrs)
    g = Grouping(np.ones(snrs.size, dtype=int), 1)
    gamma = group_sinr(g, 1, snrs, 1.0)
    identity = (1 + gamma) * np.mean(1 / (1 + snrs))
    assert abs(identity - 1) <= 1e-12
    assert snrs.min() * (1 - 1e-12) - 1e-12 <= gamma
    assert gamma <= sinr_upper_bound(snrs.size, snrs.min()) * (1 + 1e-12) + 1e-12


@settings(max_examples=200, deadline=None)
@given(snr_lists, st.integers(0, 11), st.floats(0.0, 100.0))
def test_sinr_monotone_in_gain(snrs, idx, bump):
    snrs = np.array(snrs)
    idx %= snrs.size
    g = Grouping(np.ones(snrs.size, dtype=int), 1)
    raised = snrs.copy()
    raised[idx] += bump
    assert group_sinr(g, 1, raised, 1.0) >= group_sinr(g, 1, snrs, 1.0) * (1 - 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.floats(-5, 25))
def test_rate_ceiling(seed, k, snr_db):
    rng = np.random.default_rng(seed)
    n = 12
    fr = random_response(rng, n)
    params = LinkParams.from_snr_db(n, k, snr_db, gap_db=2.0)
    labels = np.concatenate([np.arange(1, k + 1), rng.integers(0, k + 1, n - k)])
    g = Grouping(rng.permutation(labels), k)
    m = sum_rate(g, fr, params)
    used = g.labels > 0
    ceiling = np.sum(np.log2(1 + m.power * np.abs(fr.gains[used]) ** 2
                             / (params.gap * params.noise_var))) / n
    assert m.sum_rate <= ceiling * (1 + 1e-12)
    assert m.sum_rate == pytest.approx(np.sum(m.rates))
    assert np.all(m.rates >= 0)
