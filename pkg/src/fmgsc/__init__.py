"""Flexible multi-group single-carrier (FMG-SC) modulation toolkit."""

from ._validation import InvalidGroupingError, SearchSpaceTooLargeError
from .channel import (ChannelRealization, FrequencyResponse, PowerDelayProfile, frequency_response,
                      sample_channel, subcarrier_gain_ratios)
from .estimators import SubcarrierGrouper, WaterFillingOFDM
from .grouping import (BarPlacement, OptimizerResult, bars_to_grouping, ep_ss, ep_us,
                       exhaustive_search, scfde_rate, sort_subcarriers, spgs, spos, wf_ofdm_rate)
from .linkmodel import Grouping, GroupMetrics, LinkParams, sum_rate

__version__ = "0.1.0"

__all__ = [
    "InvalidGroupingError", "SearchSpaceTooLargeError",
    "ChannelRealization", "FrequencyResponse", "PowerDelayProfile", "frequency_response",
    "sample_channel", "subcarrier_gain_ratios",
    "SubcarrierGrouper", "WaterFillingOFDM",
    "BarPlacement", "OptimizerResult", "bars_to_grouping", "ep_ss", "ep_us", "exhaustive_search",
    "scfde_rate", "sort_subcarriers", "spgs", "spos", "wf_ofdm_rate",
    "Grouping", "GroupMetrics", "LinkParams", "sum_rate",
]
