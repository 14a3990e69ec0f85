"""
density: one main log-density per spectral record. Records outside the
density's domain are marked, not fatal.
"""
from __future__ import annotations

import argparse
import logging

from haar_radial.commands.common import emit_artifact, emit_csv
from haar_radial.config import Settings
from haar_radial.errors import DomainError
from haar_radial.services.density import main_log_density
from haar_radial.services.export import read_spectral_records

logger = logging.getLogger(__name__)


def register(subparsers, shared: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("density", parents=[shared], help="evaluate the main log-density")
    parser.add_argument("input", help="spectral records: .csv, a sample --extract artifact, or JSON lines")
    parser.add_argument("--reading", choices=["m", "n"], default=None, help="Vandermonde index reading")
    parser.add_argument("--mutate", choices=["none", "drop-detU"], default="none", help="(default: %(default)s)")
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="(default: %(default)s)")
    parser.set_defaults(handler=run, parser_error=parser.error)


def run(args: argparse.Namespace, settings: Settings) -> int:
    rows = []
    for line, sd in read_spectral_records(args.input):
        try:
            value = main_log_density(sd, reading=args.reading, mutation=args.mutate).log_value
            rows.append({"line": line, "log_density": value, "error": None})
        except DomainError as e:
            logger.debug(f"line {line}: {e}")
            rows.append({"line": line, "log_density": None, "error": f"DomainError: {e}"})
    logger.info(f"evaluated {len(rows)} records, {sum(r['error'] is not None for r in rows)} outside the domain")

    if args.format == "csv":
        emit_csv(
            args,
            settings,
            ["line", "log_density", "error"],
            ([r["line"], "" if r["log_density"] is None else r["log_density"], r["error"] or ""] for r in rows),
            None,
        )
    else:
        emit_artifact(args, settings, {"records": rows}, None)
    return 0
