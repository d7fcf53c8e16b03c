"""``fmgsc`` command line: ``rate-sweep``, ``papr-sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from ._validation import SearchSpaceTooLargeError
from .config import ConfigError, _parse_bool, parse_config
from .harness import run_papr_sweep, run_rate_sweep, run_validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _bool(text):
    try:
        return _parse_bool("--allow-null", text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", dest="master_seed", type=int, help="master seed (u64)")
    common.add_argument("--out", dest="output_path", help="row CSV path; summary goes next to it")
    common.add_argument("--n", type=int, help="number of subcarriers")
    common.add_argument("--k", type=int, help="number of groups")
    common.add_argument("--l", type=int, help="number of channel taps")
    common.add_argument("--pdp-decay", dest="pdp_decay", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--snr-db", dest="snr_db_grid", help="comma separated SNR points (dB)")
    common.add_argument("--schemes", help="comma separated scheme names")
    common.add_argument("--allow-null", dest="allow_null", type=_bool)
    common.add_argument("--gamma-db", dest="gamma_db", type=float)
    common.add_argument("--granularity", type=str)
    common.add_argument("--rolloff", type=float)
    common.add_argument("--oversample", type=int)
    common.add_argument("--workers", type=int, help="worker processes (output is identical)")
    common.add_argument("--es-max-n", dest="es_max_n", type=int,
                        help="override the exhaustive-search size cap")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fmgsc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rate-sweep", parents=[common], help="achievable-rate Monte-Carlo sweep")
    sub.add_parser("papr-sweep", parents=[common], help="mean-PAPR Monte-Carlo sweep")
    sub.add_parser("validate", parents=[common], help="run oracle/property checks")
    return parser


_OVERRIDE_KEYS = ("master_seed", "output_path", "n", "k", "l", "pdp_decay", "trials", "snr_db_grid",
                  "schemes", "allow_null", "gamma_db", "granularity", "rolloff", "oversample",
                  "workers", "es_max_n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS}
    try:
        cfg = parse_config(args.config, overrides)
        if args.command == "validate":
            results = run_validation(cfg)
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION
        runner = run_rate_sweep if args.command == "rate-sweep" else run_papr_sweep
        rows, summary = runner(cfg)
    except (ConfigError, SearchSpaceTooLargeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(rows)
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
