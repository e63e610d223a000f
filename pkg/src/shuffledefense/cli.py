"""Command-line driver.

Exit codes: 0 success, 1 validation error, 2 runtime error. Diagnostics go
to stderr; tables go to ``--out`` (or ``output.path``), else stdout.
"""

from __future__ import annotations

import argparse
import sys

from shuffledefense.errors import ConfigError, DomainError
from shuffledefense.scenario import PRESETS, emit_csv, load, run_figure, run_scenario
from shuffledefense.scenario.config import SCHEMA

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit value")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 1), not runtime errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="scenario file")
    common.add_argument("--seed", type=_u64, help="root seed (overrides the file)")
    common.add_argument("--trials", type=_positive, help="trial count (overrides the file)")
    common.add_argument("--out", help="CSV destination (default: output.path or stdout)")
    common.add_argument("--workers", type=_positive, help="worker processes for simulations")

    parser = _Parser(prog="shuffledefense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("analytic", "evaluate closed forms for a scenario"),
        ("simulate", "run the Monte Carlo engine for a scenario"),
        ("mtd", "evaluate the proxy-rotation Markov model"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    fig = sub.add_parser("figure", parents=[common], help="emit the table behind a figure preset")
    fig.add_argument("preset")
    sub.add_parser("list-figures", help="list figure presets")
    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("file")
    return parser


def _apply_overrides(config, args):
    if args.seed is not None:
        config = config.with_value("shuffle.seed", args.seed)
    if args.trials is not None:
        config = config.with_value("shuffle.trials", args.trials)
    if args.workers is not None:
        config = config.with_value("shuffle.workers", args.workers)
    return config


def _write(table, path) -> None:
    if path:
        emit_csv(table, path)
    else:
        emit_csv(table, sys.stdout)


def _run(args) -> int:
    if args.command == "list-figures":
        for name, preset in PRESETS.items():
            print(f"{name}\t{preset.description}")
        return EXIT_OK
    if args.command == "validate":
        load(args.file)
        print(f"{args.file}: ok", file=sys.stderr)
        return EXIT_OK
    if args.command == "figure":
        out = args.out
        overrides = {}
        if args.config:
            config = load(args.config)
            out = out or config.get("output", "path")
            if config.has("shuffle"):
                overrides = {k: config.get("shuffle", k) for k in ("trials", "seed", "workers")}
        for key in ("trials", "seed", "workers"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        _write(run_figure(args.preset, **overrides), out)
        return EXIT_OK
    if not args.config:
        raise ConfigError("--config", f"required for {args.command}")
    config = load(args.config)
    if config.mode != args.command:
        # the subcommand decides what runs; the file supplies the parameters
        if args.command in ("analytic", "simulate") and not config.has("shuffle"):
            config = config.with_value("shuffle.rounds", SCHEMA["shuffle"]["rounds"].default)
        config = config.with_mode(args.command)
    if config.has("shuffle") or args.command == "simulate":
        config = _apply_overrides(config, args)
    _write(run_scenario(config), args.out or config.get("output", "path"))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        return _run(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # runtime failures: solver, I/O, worker crashes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
