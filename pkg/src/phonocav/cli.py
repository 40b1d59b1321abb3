"""
CLI entrypoint: subcommands run, validate and compare.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import load_config
from .diagnostics import SPECTRAL_WINDOW, relative_error
from .errors import ConfigError, PhonocavError
from .pipeline import run
from .spectra import read_spectrum
from .verify import validate

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(format="%(message)s", level=level)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", default=None, help="Run configuration JSON (default: built-in defaults)")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a configuration key by dotted path, e.g. system.g=4.0 (repeatable; value parsed as JSON)",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")


def _run(args: argparse.Namespace) -> int:
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    try:
        config = load_config(args.config, overrides, out=args.out)
        report = run(config)
    except (ConfigError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if not report.ok:
        print(
            f"Error: {report.failures} (point, method) run(s) failed; see {report.directory / 'summary.csv'}",
            file=sys.stderr,
        )
        return EXIT_FAILED
    return EXIT_OK


def _validate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config, args.overrides)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if validate(config)["passed"] else EXIT_CONFIG


def _compare(args: argparse.Namespace) -> int:
    try:
        error = relative_error(read_spectrum(args.reference), read_spectrum(args.test), window=args.window)
    except (PhonocavError, ValueError, RuntimeError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED
    print(f"relative_error={error:.6e}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse args and dispatch to run, validate or compare. Returns exit code."""
    ap = argparse.ArgumentParser(
        prog="phonocav",
        description="Phonon-coupled emitter-cavity spectra: weak, polaron, variational and polariton-polaron master equations.",
    )
    sub = ap.add_subparsers(dest="command", required=True, help="Command")

    # ─── run ───
    run_p = sub.add_parser("run", help="Run every sweep point and method; write spectra, populations and diagnostics")
    _add_config_args(run_p)
    run_p.add_argument("--out", default=None, help="Output directory (overrides output.directory)")
    run_p.add_argument("--workers", type=int, default=None, help="Sweep points run in parallel (overrides workers)")

    # ─── validate ───
    validate_p = sub.add_parser("validate", help="Dry-run checks of grids, quadrature and oracle size; writes nothing")
    _add_config_args(validate_p)

    # ─── compare ───
    compare_p = sub.add_parser("compare", help="Relative L2 error of a spectrum CSV against a reference CSV")
    compare_p.add_argument("reference", help="Reference spectrum CSV")
    compare_p.add_argument("test", help="Spectrum CSV to compare")
    compare_p.add_argument(
        "--window", type=float, default=SPECTRAL_WINDOW, help="Half width of the comparison window (rad/ps)"
    )
    compare_p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    compare_p.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    args = ap.parse_args(argv)
    _setup_logging(args)

    if args.command == "compare":
        return _compare(args)
    if args.command == "validate":
        return _validate(args)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
