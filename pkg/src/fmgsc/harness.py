"""Seeded Monte-Carlo sweeps and the self-validation suite.

Every (SNR point, trial) pair draws its channel from its own random stream,
and all schemes in that trial see the same realization. Rows are written in
``(scheme, snr, trial)`` order, so the CSV bytes do not depend on how many
workers ran the trials.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import grouping as grp
from ._validation import SearchSpaceTooLargeError
from .channel import ChannelRealization, PowerDelayProfile, frequency_response, sample_channel, subcarrier_gain_ratios
from .config import ExperimentConfig
from .linkmodel import Grouping, LinkParams, sum_rate
from .rng import stream
from .waveform import qam_constellation, synthesize_shaped

__all__ = [
    "run_rate_sweep",
    "run_papr_sweep",
    "run_validation",
    "CheckResult",
    "summary_path",
    "DEFAULT_RATE_SCHEMES",
    "DEFAULT_PAPR_SCHEMES",
]

log = logging.getLogger(__name__)

DEFAULT_RATE_SCHEMES = ("SPOS", "SPGS", "EP-SS", "EP-US")
DEFAULT_PAPR_SCHEMES = ("SC-FDE", "FMG-SC-K1", "FMG-SC-K2", "WF-OFDM-DISC")

ROW_HEADER = ("scheme", "snr_db", "trial", "metric", "value")
SUMMARY_HEADER = ("scheme", "snr_db", "metric", "mean", "stderr", "count")


def _fmt(x) -> str:
    return format(float(x), ".9g")


def summary_path(output_path) -> Path:
    p = Path(output_path)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def _fmgsc_groups(scheme: str, cfg: ExperimentConfig) -> int:
    if scheme == "FMG-SC":
        return cfg.k
    return int(scheme[len("FMG-SC-K"):])


def _check_sizes(cfg: ExperimentConfig, schemes):
    if "ES" in schemes and cfg.n > cfg.es_max_n:
        raise SearchSpaceTooLargeError(
            f"ES requested with n={cfg.n}, above the exhaustive-search cap es_max_n={cfg.es_max_n}")
    for s in schemes:
        if s.startswith("FMG-SC") and _fmgsc_groups(s, cfg) > cfg.n:
            raise ValueError(f"{s}: more groups than subcarriers (n={cfg.n})")


def _trial_channel(cfg: ExperimentConfig, snr_index: int, trial: int, snr_db: float):
    pdp = PowerDelayProfile(cfg.l, cfg.pdp_decay)
    ch = sample_channel(pdp, stream(cfg.master_seed, snr_index, trial, 0))
    fr = frequency_response(ch, cfg.n, 1.0)
    params = LinkParams.from_snr_db(cfg.n, cfg.k, snr_db, cfg.gamma_db)
    return fr, params


def _optimize(scheme, fr, params, cfg):
    """Grouping chosen by a set-partitioning or equal-partition scheme."""
    if scheme == "ES":
        return grp.exhaustive_search(fr, params, cfg.allow_null, max_subcarriers=cfg.es_max_n)
    if scheme == "SPOS":
        return grp.spos(fr, params, cfg.allow_null)
    if scheme == "SPGS":
        return grp.spgs(fr, params, cfg.allow_null)
    if scheme == "EP-US":
        return grp.ep_us(fr, params)
    if scheme == "EP-SS":
        return grp.ep_ss(fr, params)
    if scheme.startswith("FMG-SC"):
        # FMG-SC always may null subcarriers; grouping by SPGS
        return grp.spgs(fr, params.with_groups(_fmgsc_groups(scheme, cfg)), allow_null=True)
    raise ValueError(f"scheme {scheme!r} has no grouping")


def _scheme_rate(scheme, fr, params, cfg) -> float:
    if scheme == "SC-FDE":
        return grp.scfde_rate(fr, params)
    if scheme == "WF-OFDM-CONT":
        return grp.wf_ofdm_rate(fr, params)
    if scheme == "WF-OFDM-DISC":
        return grp.wf_ofdm_rate(fr, params, cfg.granularity)
    if scheme == "TONE":
        raise ValueError("TONE is a PAPR-only scheme")
    return _optimize(scheme, fr, params, cfg).sum_rate


def _rate_trial(cfg: ExperimentConfig, schemes, job):
    snr_index, snr_db, trial = job
    fr, params = _trial_channel(cfg, snr_index, trial, snr_db)
    return [_scheme_rate(s, fr, params, cfg) for s in schemes]


def _snap_bits(bits, granularity):
    return math.floor(bits / granularity + 1e-9) * granularity


def _scheme_spectrum(scheme, fr, params, cfg, rng) -> np.ndarray:
    """One N-bin transmit spectrum (unitary-DFT scale) for ``scheme``."""
    n = cfg.n
    ratios = subcarrier_gain_ratios(fr)
    spec = np.zeros(n, dtype=np.complex128)
    if scheme == "TONE":
        spec[0] = np.sqrt(params.total_power)
        return spec
    if scheme in ("WF-OFDM-CONT", "WF-OFDM-DISC"):
        if scheme == "WF-OFDM-DISC":
            bits, powers = grp.bit_loading(ratios, params.total_power, params.gap, cfg.granularity)
        else:
            powers = grp.water_filling(ratios, params.total_power, params.gap)
            bits = np.log2(1 + powers * ratios / params.gap)
        for i in np.flatnonzero(powers > 0):
            const = qam_constellation(bits[i], cfg.granularity)
            spec[i] = np.sqrt(powers[i]) * const[rng.integers(const.size)]
        return spec
    if scheme == "SC-FDE":
        g = Grouping.single_group(n)
        metrics = sum_rate(g, fr, params.with_groups(1))
    else:
        res = _optimize(scheme, fr, params, cfg)
        g, metrics = res.grouping, res.metrics
    for k in range(1, g.n_groups + 1):
        members = g.members(k)
        bits = _snap_bits(math.log2(1 + metrics.sinr[k - 1] / params.gap), cfg.granularity)
        const = qam_constellation(bits, cfg.granularity)
        x = const[rng.integers(const.size, size=members.size)]
        spec[members] = np.sqrt(metrics.power) * np.fft.fft(x, norm="ortho")
    return spec


def _papr_trial(cfg: ExperimentConfig, schemes, job):
    snr_index, snr_db, trial = job
    fr, params = _trial_channel(cfg, snr_index, trial, snr_db)
    blocks = []
    for j, s in enumerate(schemes):
        rng = stream(cfg.master_seed, snr_index, trial, 1 + j)
        blocks.append(np.fft.ifft(_scheme_spectrum(s, fr, params, cfg, rng), norm="ortho"))
    _, stats = synthesize_shaped(np.array(blocks), cfg.oversample, cfg.rolloff)
    return list(10 * np.log10(stats.papr))


def _run_jobs(fn, cfg, schemes):
    jobs = [(i, snr, t) for i, snr in enumerate(cfg.snr_db_grid) for t in range(cfg.trials)]
    work = partial(fn, cfg, tuple(schemes))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, jobs, chunksize=max(1, len(jobs) // (8 * cfg.workers))))
    else:
        results = [work(j) for j in jobs]
    # values[scheme][snr_index][trial]
    values = np.empty((len(schemes), len(cfg.snr_db_grid), cfg.trials))
    for (i, _, t), row in zip(jobs, results):
        values[:, i, t] = row
    return values


def _write(cfg, schemes, values, metric, default_name):
    out = Path(cfg.output_path or default_name)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_HEADER)
        for j, s in enumerate(schemes):
            for i, snr in enumerate(cfg.snr_db_grid):
                for t in range(cfg.trials):
                    w.writerow((s, _fmt(snr), t, metric, _fmt(values[j, i, t])))
    summ = summary_path(out)
    with summ.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for j, s in enumerate(schemes):
            for i, snr in enumerate(cfg.snr_db_grid):
                v = values[j, i]
                stderr = v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.0
                w.writerow((s, _fmt(snr), metric, _fmt(v.mean()), _fmt(stderr), v.size))
    log.info("wrote %s and %s", out, summ)
    return out, summ


def run_rate_sweep(cfg: ExperimentConfig):
    """Achievable rate (bps/Hz) of every scheme per SNR point and trial.

    Returns the paths of the row CSV and the summary CSV.
    """
    cfg.validate()
    schemes = list(cfg.schemes or DEFAULT_RATE_SCHEMES)
    if "TONE" in schemes:
        raise ValueError("TONE is a PAPR-only scheme")
    _check_sizes(cfg, schemes)
    values = _run_jobs(_rate_trial, cfg, schemes)
    return _write(cfg, schemes, values, "rate_bpshz", "rate_sweep.csv")


def run_papr_sweep(cfg: ExperimentConfig):
    """PAPR (dB) of one RRC-shaped, oversampled block per scheme, SNR point and trial.

    Group constellations follow the loaded bits of each group (QPSK at least);
    OFDM uses per-subcarrier water-filling bit loading.
    """
    cfg.validate()
    schemes = list(cfg.schemes or DEFAULT_PAPR_SCHEMES)
    _check_sizes(cfg, schemes)
    values = _run_jobs(_papr_trial, cfg, schemes)
    return _write(cfg, schemes, values, "papr_db", "papr_sweep.csv")


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    relation: str = "<="

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured {self.measured:.6g} {self.relation} {self.threshold:.6g}"


def _check_numerics(seed):
    from .numerics import circular_convolve, dft, idft
    from .waveform import add_cp, remove_cp

    rng = stream(seed, 101)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(1, 257))
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        scale = np.linalg.norm(a)
        fa = dft(a)
        errs = [
            abs(np.linalg.norm(fa) - scale) / scale,
            np.linalg.norm(idft(fa) - a) / scale,
            np.max(np.abs(dft(circular_convolve(a, b)) - np.sqrt(n) * fa * dft(b)))
            / (np.linalg.norm(a) * np.linalg.norm(b)),
        ]
        taps = a[: min(n, 8)]
        fr = frequency_response(ChannelRealization(taps), n, 1.0)
        h_circ = np.array([[taps[(r - c) % n] if (r - c) % n < taps.size else 0
                            for c in range(n)] for r in range(n)]) if n <= 64 else None
        if h_circ is not None:
            f = np.fft.fft(np.eye(n), norm="ortho")
            errs.append(np.max(np.abs(f @ h_circ @ f.conj().T - np.diag(fr.gains))))
        cp = taps.size - 1
        lin = np.convolve(add_cp(b, cp), taps)[cp:cp + n]
        errs.append(np.max(np.abs(remove_cp(add_cp(b, cp), cp) - b)))
        errs.append(np.max(np.abs(lin - circular_convolve(b, np.pad(taps, (0, n - taps.size))))))
        worst = max(worst, max(errs))
    return CheckResult("numerics identities (100 instances, n <= 256)", worst, 1e-10, worst <= 1e-10)


def _check_spos_vs_es(seed, n=10, k=2, trials=200):
    pdp = PowerDelayProfile(min(8, n), 1.0)
    mismatches = 0
    excess = 0.0
    for t in range(trials):
        fr = frequency_response(sample_channel(pdp, stream(seed, 102, t)), n, 1.0)
        params = LinkParams.from_snr_db(n, k, 10.0 * (t % 3))
        sp = grp.spos(fr, params, allow_null=True)
        srt = grp.sort_subcarriers(subcarrier_gain_ratios(fr))
        brute = max(sum_rate(grp.bars_to_grouping(grp.BarPlacement(b, n), srt), fr, params).sum_rate
                    for b in grp._bar_candidates(n, k, False))
        mismatches += sp.sum_rate != brute
        es = grp.exhaustive_search(fr, params, allow_null=True)
        excess = max(excess, sp.sum_rate - es.sum_rate)
    return [
        CheckResult(f"SPOS == sorted-partition enumeration (N={n}, K={k}, {trials} trials), mismatches",
                    mismatches, 0, mismatches == 0),
        CheckResult(f"SPOS - ES (N={n}, K={k}, {trials} trials), max excess", excess, 0.0, excess <= 0.0),
    ]


def _check_sinr(seed, cases=20, blocks=10_000):
    from .waveform import measure_sinr_empirical

    pdp = PowerDelayProfile(8, 1.0)
    worst = 0.0
    for c in range(cases):
        rng = stream(seed, 103, c)
        n = 16
        fr = frequency_response(sample_channel(pdp, rng), n, 1.0)
        k = int(rng.integers(1, 4))
        params = LinkParams.from_snr_db(n, k, float(rng.uniform(0, 20)))
        labels = np.concatenate([np.arange(1, k + 1), rng.integers(0, k + 1, n - k)])
        g = Grouping(rng.permutation(labels), k)
        analytic = sum_rate(g, fr, params).sinr
        measured = measure_sinr_empirical(g, fr, params, blocks, rng)
        worst = max(worst, float(np.max(np.abs(measured - analytic) / analytic)))
    return CheckResult(f"empirical vs analytic group SINR ({cases} cases, {blocks} blocks), max rel err",
                       worst, 0.05, worst <= 0.05)


def _check_spgs(seed, n=64, k=2, trials=200):
    pdp = PowerDelayProfile(8, 1.0)
    drops = 0
    longest = 0
    for t in range(trials):
        fr = frequency_response(sample_channel(pdp, stream(seed, 104, t)), n, 1.0)
        res = grp.spgs(fr, LinkParams.from_snr_db(n, k, 10.0 * (t % 3)), allow_null=bool(t % 2))
        drops += int(np.any(np.diff(res.history) < 0))
        longest = max(longest, res.iterations)
    return [
        CheckResult(f"SPGS objective decreases ({trials} trials)", drops, 0, drops == 0),
        CheckResult(f"SPGS outer iterations (N={n})", longest, 10 * n, longest <= 10 * n),
    ]


def _check_bit_loading(seed, trials=100, granularity=1 / 3):
    pdp = PowerDelayProfile(8, 1.0)
    worst = -np.inf
    for t in range(trials):
        fr = frequency_response(sample_channel(pdp, stream(seed, 105, t)), 64, 1.0)
        params = LinkParams.from_snr_db(64, 1, 10.0 * (t % 3), 4.54)
        cont = grp.wf_ofdm_rate(fr, params)
        disc = grp.wf_ofdm_rate(fr, params, granularity)
        worst = max(worst, cont - disc if disc <= cont + 1e-12 else np.inf)
    return CheckResult("continuous - discrete WF-OFDM rate", worst, granularity,
                       0 <= worst <= granularity)


def run_validation(cfg: ExperimentConfig | None = None) -> list:
    """Run the oracle and property checks; returns one :class:`CheckResult` per check."""
    seed = (cfg or ExperimentConfig()).master_seed
    results = [_check_numerics(seed)]
    results += _check_spos_vs_es(seed)
    results.append(_check_sinr(seed))
    results += _check_spgs(seed)
    results.append(_check_bit_loading(seed))
    return results
