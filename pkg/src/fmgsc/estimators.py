"""scikit-learn style front end for the grouping optimizers.

Inputs are per-subcarrier complex channel gains ``h_n``; a 2-D input is a
batch of independent realizations, one per row.

>>> grouper = SubcarrierGrouper(n_groups=2, method="spgs", total_power=64.0)
>>> grouper.fit(h).labels_          # doctest: +SKIP
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import grouping as grp
from ._validation import check_frequency_responses, check_scalar
from .channel import FrequencyResponse
from .linkmodel import Grouping, LinkParams, sum_rate

__all__ = ["SubcarrierGrouper", "WaterFillingOFDM"]

_METHODS = ("es", "spos", "spgs", "ep-us", "ep-ss")


class SubcarrierGrouper(BaseEstimator):
    """Choose an FMG-SC subcarrier-to-group mapping for a channel realization.

    Parameters
    ----------
    n_groups : int, default=2
        Number of single-carrier groups ``K``.
    method : {"spgs", "spos", "es", "ep-ss", "ep-us"}, default="spgs"
    allow_null : bool, default=True
        Whether the weakest subcarriers may be left unused.
    total_power : float or None, default=None
        Transmit power budget; ``None`` means one unit per subcarrier.
    noise_var : float, default=1.0
    gap : float, default=1.0
        Linear SNR gap of the modulation and coding scheme.
    n_restarts : int, default=1
        Starting points for ``spgs``; extra ones are random.
    max_subcarriers : int, default=14
        Size cap for ``es``.
    random_state : int, Generator or None

    Attributes
    ----------
    labels_ : ndarray of shape (N,)
        Group of each subcarrier, 0 for unused.
    sinr_, group_rates_ : ndarray of shape (K,)
    sum_rate_ : float
    power_ : float
        Power per used subcarrier.
    bars_ : tuple or None
    n_evaluations_, n_iter_ : int
    """

    def __init__(self, n_groups=2, method="spgs", allow_null=True, total_power=None,
                 noise_var=1.0, gap=1.0, n_restarts=1, max_subcarriers=grp.ES_MAX_SUBCARRIERS,
                 random_state=None):
        self.n_groups = n_groups
        self.method = method
        self.allow_null = allow_null
        self.total_power = total_power
        self.noise_var = noise_var
        self.gap = gap
        self.n_restarts = n_restarts
        self.max_subcarriers = max_subcarriers
        self.random_state = random_state

    def _validate_params(self, n):
        check_scalar(self.n_groups, "n_groups", target_type=numbers.Integral, min_val=1, max_val=n)
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        check_scalar(self.noise_var, "noise_var", min_val=0, include_min=False)
        check_scalar(self.gap, "gap", min_val=1)
        check_scalar(self.n_restarts, "n_restarts", target_type=numbers.Integral, min_val=1)
        power = n * self.noise_var if self.total_power is None else self.total_power
        check_scalar(power, "total_power", min_val=0, include_min=False)
        return LinkParams(n, int(self.n_groups), float(power), float(self.noise_var), float(self.gap))

    def _solve(self, h, params):
        fr = FrequencyResponse(h, params.noise_var)
        if self.method == "es":
            return grp.exhaustive_search(fr, params, self.allow_null, self.max_subcarriers)
        if self.method == "spos":
            return grp.spos(fr, params, self.allow_null)
        if self.method == "spgs":
            return grp.spgs(fr, params, self.allow_null, n_restarts=self.n_restarts,
                            random_state=self.random_state)
        if self.method == "ep-us":
            return grp.ep_us(fr, params)
        return grp.ep_ss(fr, params)

    def fit(self, X, y=None):
        """Optimize the grouping for a single realization ``X`` of shape (N,)."""
        H = check_frequency_responses(X)
        if H.shape[0] != 1:
            raise ValueError("fit expects a single realization; use predict for batches")
        params = self._validate_params(H.shape[1])
        res = self._solve(H[0], params)
        self.n_features_in_ = H.shape[1]
        self.grouping_ = res.grouping
        self.labels_ = res.grouping.labels
        self.sinr_ = res.metrics.sinr
        self.group_rates_ = res.metrics.rates
        self.sum_rate_ = res.metrics.sum_rate
        self.power_ = res.metrics.power
        self.bars_ = res.bars.bars if res.bars is not None else None
        self.n_evaluations_ = res.evaluations
        self.n_iter_ = res.iterations
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def predict(self, X):
        """Optimized labels for every realization (row) of ``X``."""
        H = check_frequency_responses(X)
        params = self._validate_params(H.shape[1])
        labels = np.stack([self._solve(h, params).grouping.labels for h in H])
        return labels[0] if np.ndim(X) == 1 else labels

    def score(self, X, y=None):
        """Mean sum rate of the fitted grouping on the realizations in ``X``."""
        check_is_fitted(self, "grouping_")
        H = check_frequency_responses(X)
        if H.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {H.shape[1]} subcarriers, grouper was fitted with "
                             f"{self.n_features_in_}")
        params = self._validate_params(H.shape[1])
        return float(np.mean([sum_rate(self.grouping_, FrequencyResponse(h, params.noise_var),
                                       params).sum_rate for h in H]))


class WaterFillingOFDM(BaseEstimator):
    """Gap-adjusted water-filling power (and optional discrete bit) allocation.

    ``granularity=None`` gives the continuous allocation; otherwise bits are
    loaded greedily in steps of ``granularity``.
    """

    def __init__(self, total_power=None, noise_var=1.0, gap=1.0, granularity=None):
        self.total_power = total_power
        self.noise_var = noise_var
        self.gap = gap
        self.granularity = granularity

    def fit(self, X, y=None):
        H = check_frequency_responses(X)
        if H.shape[0] != 1:
            raise ValueError("fit expects a single realization")
        n = H.shape[1]
        check_scalar(self.noise_var, "noise_var", min_val=0, include_min=False)
        check_scalar(self.gap, "gap", min_val=1)
        power = n * self.noise_var if self.total_power is None else self.total_power
        check_scalar(power, "total_power", min_val=0, include_min=False)
        ratios = np.abs(H[0]) ** 2 / self.noise_var
        if self.granularity is None:
            self.power_ = grp.water_filling(ratios, power, self.gap)
            self.bits_ = np.log2(1 + self.power_ * ratios / self.gap)
        else:
            check_scalar(self.granularity, "granularity", min_val=0, include_min=False)
            self.bits_, self.power_ = grp.bit_loading(ratios, power, self.gap, self.granularity)
        self.rate_ = float(np.sum(self.bits_) / n)
        self.n_features_in_ = n
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "rate_")
        return self.rate_
