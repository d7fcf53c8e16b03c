"""Experiment configuration: a flat ``key = value`` file plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "load_config_file", "SCHEMES"]

# FMG-SC-K<n> (FMG-SC with n groups) and TONE (constant-envelope PAPR check)
# are accepted on top of these.
SCHEMES = ("ES", "SPOS", "SPGS", "EP-US", "EP-SS", "SC-FDE",
           "WF-OFDM-CONT", "WF-OFDM-DISC", "FMG-SC")


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


def _is_known_scheme(name: str) -> bool:
    if name in SCHEMES or name == "TONE":
        return True
    if name.startswith("FMG-SC-K"):
        tail = name[len("FMG-SC-K"):]
        return tail.isdigit() and int(tail) >= 1
    return False


@dataclass
class ExperimentConfig:
    """Monte-Carlo sweep settings.

    Defaults follow the reference simulation setup: 64 subcarriers, an
    8-tap exponential channel, a 4.54 dB SNR gap, 1/3-bit loading
    granularity, RRC rolloff 0.1 and 1000 channel realizations per point.
    ``snr_db`` is ``P / (N sigma^2)``.
    """

    n: int = 64
    k: int = 2
    l: int = 8  # noqa: E741
    pdp_decay: float = 1.0
    snr_db_grid: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    trials: int = 1000
    master_seed: int = 0
    schemes: list | None = None
    gamma_db: float = 4.54
    granularity: float = 1 / 3
    rolloff: float = 0.1
    oversample: int = 4
    allow_null: bool = False
    output_path: str | None = None
    metadata: str = ""
    workers: int = 1
    es_max_n: int = 14

    def validate(self) -> "ExperimentConfig":
        def bad(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.n < 1:
            bad("n", f"must be >= 1, got {self.n}")
        if not 1 <= self.k <= self.n:
            bad("k", f"must satisfy 1 <= k <= n, got {self.k}")
        if not 1 <= self.l <= self.n:
            bad("l", f"must satisfy 1 <= l <= n, got {self.l}")
        if self.pdp_decay < 0:
            bad("pdp_decay", f"must be >= 0, got {self.pdp_decay}")
        if not self.snr_db_grid:
            bad("snr_db_grid", "must be nonempty")
        if self.trials < 1:
            bad("trials", f"must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed < 2 ** 64:
            bad("master_seed", f"must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.schemes is not None:
            if not self.schemes:
                bad("schemes", "must be nonempty")
            for s in self.schemes:
                if not _is_known_scheme(s):
                    bad("schemes", f"unknown scheme {s!r}")
            if len(set(self.schemes)) != len(self.schemes):
                bad("schemes", "duplicate scheme")
        if self.gamma_db < 0:
            bad("gamma_db", f"gap must be >= 0 dB, got {self.gamma_db}")
        if not self.granularity > 0:
            bad("granularity", f"must be > 0, got {self.granularity}")
        if not 0 <= self.rolloff <= 1:
            bad("rolloff", f"must lie in [0, 1], got {self.rolloff}")
        if self.oversample < 1:
            bad("oversample", f"must be >= 1, got {self.oversample}")
        if self.workers < 1:
            bad("workers", f"must be >= 1, got {self.workers}")
        if self.es_max_n < 1:
            bad("es_max_n", f"must be >= 1, got {self.es_max_n}")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_KEYS = {"n", "k", "l", "trials", "master_seed", "oversample", "workers", "es_max_n"}
_FLOAT_KEYS = {"pdp_decay", "gamma_db", "granularity", "rolloff"}


def _parse_bool(key, text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_float(key, text):
    text = str(text).strip()
    if "/" in text:
        num, den = text.split("/", 1)
        try:
            return float(num) / float(den)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from exc
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc


def _coerce(key, value):
    if key not in _FIELDS:
        raise ConfigError(f"{key}: unknown configuration key")
    if not isinstance(value, str):
        return value
    if key in _INT_KEYS:
        try:
            return int(value.strip(), 0)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc
    if key in _FLOAT_KEYS:
        return _parse_float(key, value)
    if key == "allow_null":
        return _parse_bool(key, value)
    if key == "snr_db_grid":
        items = [v for v in value.split(",") if v.strip()]
        return [_parse_float(key, v) for v in items]
    if key == "schemes":
        return [v.strip().upper() for v in value.split(",") if v.strip()]
    if key == "output_path":
        return value.strip() or None
    return value.strip()


def load_config_file(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        values[key] = _coerce(key, value)
    return values


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    """Merge defaults, an optional config file, and overrides (overrides win)."""
    values = load_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
