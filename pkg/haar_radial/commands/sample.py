"""
sample: Haar matrices on U(k), or the spectral coordinates of Haar samples
on U(n+m) with --extract.
"""
from __future__ import annotations

import argparse
import logging
from collections import Counter

from haar_radial.commands.common import emit_artifact, emit_csv, positive_int
from haar_radial.config import Settings
from haar_radial.errors import DegenerateSampleError
from haar_radial.models import MatrixPayload, SpectralRecord
from haar_radial.services.export import (
    matrix_header,
    matrix_row,
    spectral_header,
    spectral_row,
)
from haar_radial.services.matrix_core import BlockUnitary, haar_unitary
from haar_radial.services.spectral import extract_direct, extract_via_cayley
from haar_radial.utils import chunk_rng

logger = logging.getLogger(__name__)

MAX_ATTEMPTS_PER_SAMPLE = 100


def register(subparsers, shared: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("sample", parents=[shared], help="draw Haar samples")
    parser.add_argument("--k", type=positive_int, help="matrix size for plain Haar samples")
    parser.add_argument("--n", type=positive_int, help="upper block size")
    parser.add_argument("--m", type=positive_int, help="lower block size")
    parser.add_argument("--samples", type=positive_int, default=10, help="number of samples (default: %(default)s)")
    parser.add_argument("--extract", action="store_true", help="write spectral coordinates instead of matrices")
    parser.add_argument(
        "--path", choices=["direct", "cayley"], default="direct", help="extraction path (default: %(default)s)"
    )
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="(default: %(default)s)")
    parser.set_defaults(handler=run, parser_error=parser.error)


def _size(args: argparse.Namespace) -> tuple[int, int | None, int | None]:
    if args.extract:
        if args.n is None or args.m is None:
            args.parser_error("--extract needs --n and --m")
        return args.n + args.m, args.n, args.m
    if args.k is not None:
        return args.k, None, None
    if args.n is not None and args.m is not None:
        return args.n + args.m, args.n, args.m
    args.parser_error("give --k, or --n and --m")


def run(args: argparse.Namespace, settings: Settings) -> int:
    k, n, m = _size(args)
    rng = chunk_rng(args.seed, 0)

    if not args.extract:
        matrices = [haar_unitary(k, rng) for _ in range(args.samples)]
        if args.format == "csv":
            emit_csv(args, settings, matrix_header(k), (matrix_row(g) for g in matrices), args.seed)
        else:
            payload = {"k": k, "matrices": [MatrixPayload.from_array(g).model_dump() for g in matrices]}
            emit_artifact(args, settings, payload, args.seed)
        return 0

    if args.path == "direct":
        extract = lambda g: extract_direct(g, strict_u=True)
    else:
        extract = extract_via_cayley
    records, rejected, attempts = [], Counter(), 0
    while len(records) < args.samples and attempts < MAX_ATTEMPTS_PER_SAMPLE * args.samples:
        attempts += 1
        try:
            records.append(extract(BlockUnitary.haar(n, m, rng)))
        except DegenerateSampleError as e:
            rejected[e.reason.value] += 1
            logger.debug(f"rejected: {e}")
    logger.info(f"extracted {len(records)} samples in {attempts} attempts, rejected {dict(rejected)}")

    if args.format == "csv":
        emit_csv(args, settings, spectral_header(n, m), (spectral_row(sd) for sd in records), args.seed)
    else:
        payload = {
            "n": n,
            "m": m,
            "n_attempted": attempts,
            "rejected_by_reason": dict(sorted(rejected.items())),
            "records": [SpectralRecord.from_spectral(sd).model_dump() for sd in records],
        }
        emit_artifact(args, settings, payload, args.seed)
    return 0
