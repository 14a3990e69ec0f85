from __future__ import annotations

import argparse
import json
from typing import Any, Iterable

from haar_radial import __version__
from haar_radial.config import Settings
from haar_radial.models import Artifact
from haar_radial.services.export import STDOUT, write_csv, write_json


def positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def positive_float(value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value!r}")
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {x}")
    return x


def shared_parser(settings: Settings) -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=0, help="base seed (default: %(default)s)")
    parser.add_argument(
        "--threads",
        type=positive_int,
        default=settings.threads,
        help="worker threads; results do not depend on it (default: HAAR_RADIAL_THREADS or %(default)s)",
    )
    parser.add_argument("--tol-unitarity", type=positive_float, default=None, help="override tol_unitarity")
    parser.add_argument("--tol-degenerate", type=positive_float, default=None, help="override tol_degenerate")
    parser.add_argument("--out", default=STDOUT, help="output path, '-' for stdout (default: %(default)s)")
    return parser


def _envelope(args: argparse.Namespace, settings: Settings, seed: int | None) -> dict[str, Any]:
    return {
        "version": __version__,
        "command": args.command if not getattr(args, "suite", None) else f"{args.command} {args.suite}",
        "config": {"settings": settings.model_dump(mode="json"), "args": _jsonable_args(args)},
        "seed": seed,
    }


def emit_artifact(args: argparse.Namespace, settings: Settings, payload: Any, seed: int | None) -> None:
    write_json(args.out, Artifact(**_envelope(args, settings, seed), payload=payload))


def emit_csv(
    args: argparse.Namespace, settings: Settings, header: list[str], rows: Iterable[list[Any]], seed: int | None
) -> None:
    """CSV with the artifact envelope as "# key: value" lines ahead of the header."""
    envelope = _envelope(args, settings, seed)
    preamble = [
        f"version: {envelope['version']}",
        f"command: {envelope['command']}",
        f"seed: {envelope['seed']}",
        f"config: {json.dumps(envelope['config'], sort_keys=True, default=str)}",
    ]
    write_csv(args.out, header, rows, preamble=preamble)


def _jsonable_args(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "parser_error")}
