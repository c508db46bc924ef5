"""Command line entry point: ``rareber run`` and ``rareber compare``.

Exit status is 0 on success, 2 on a configuration error and 3 on an I/O
error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import (
    COMPARE_COLUMNS,
    ConfigError,
    compare_methods,
    emit_results,
    format_results,
    load_config,
    read_results,
    run_experiment,
)

EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rareber", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an SNR sweep")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--snr", type=float, nargs="+", help="SNR values in dB")
    run.add_argument("--method", nargs="+", help="methods to run")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--format", choices=("csv", "json-lines"))

    cmp_ = sub.add_parser("compare", help="difference table against a baseline method")
    cmp_.add_argument("--baseline", required=True)
    cmp_.add_argument("--in", dest="inp", required=True)
    cmp_.add_argument("--out", required=True)
    return parser


def _run(args) -> int:
    config = load_config(
        args.config,
        snr=tuple(args.snr) if args.snr else None,
        method=tuple(args.method) if args.method else None,
        seed=args.seed,
        out=args.out,
        format=args.format,
    )
    rows = run_experiment(config)
    if config.out:
        emit_results(rows, config.out, config.format)
    else:
        sys.stdout.write(format_results(rows, config.format))
    return 0


def _compare(args) -> int:
    rows = read_results(args.inp)
    try:
        table = compare_methods(rows, args.baseline)
    except ValueError as exc:
        raise ConfigError("baseline", str(exc)) from None
    emit_results(table, args.out, "csv", COMPARE_COLUMNS)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return _run(args) if args.command == "run" else _compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
