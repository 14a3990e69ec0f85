# Load .env before the settings are first built
from dotenv import load_dotenv
load_dotenv()

import argparse
import logging
import sys

from haar_radial import __version__
from haar_radial.config import apply_overrides, get_settings
from haar_radial.errors import RecordParseError

# Import Commands
from haar_radial.commands import density as density_command
from haar_radial.commands import sample as sample_command
from haar_radial.commands import verify as verify_command
from haar_radial.commands.common import shared_parser

logger = logging.getLogger(__name__)

# 0 ok, 1 suite failed (handlers), 2 usage (argparse), 3 I/O
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="haar_radial",
        description="Radial part of Haar measure on U(n+m): sampling, densities and verification suites.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help=f"logging level (default: {settings.log_level})")
    subparsers = parser.add_subparsers(dest="command", required=True)

    shared = shared_parser(settings)
    sample_command.register(subparsers, shared)
    density_command.register(subparsers, shared)
    verify_command.register(subparsers, shared)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = apply_overrides(
        threads=args.threads,
        tol_unitarity=args.tol_unitarity,
        tol_degenerate=args.tol_degenerate,
        log_level=args.log_level,
    )
    logging.basicConfig(level=settings.log_level.upper(), stream=sys.stderr)
    try:
        return args.handler(args, settings)
    except (OSError, RecordParseError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
