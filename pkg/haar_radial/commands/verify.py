"""
verify: run one suite and write its report. Exit code 0 iff the suite's
acceptance threshold is met.
"""
from __future__ import annotations

import argparse
import logging

from haar_radial.commands.common import emit_artifact, positive_float, positive_int
from haar_radial.config import Settings
from haar_radial.services import importance, verify

logger = logging.getLogger(__name__)

SUITES = ("normalization", "forward", "staged", "roundtrip", "analytic", "haar-moment", "importance-self-test")
DEFAULT_SAMPLES = {
    "normalization": 100_000,
    "forward": 10_000,
    "staged": 100_000,
    "roundtrip": 1_000,
    "analytic": 1_000,
    "haar-moment": 100_000,
    "importance-self-test": 100_000,
}


def register(subparsers, shared: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("verify", parents=[shared], help="run a verification suite")
    parser.add_argument("suite", choices=SUITES)
    parser.add_argument("--n", type=positive_int, default=1, help="(default: %(default)s)")
    parser.add_argument("--m", type=positive_int, default=1, help="(default: %(default)s)")
    parser.add_argument("--k", type=positive_int, default=1, help="group size for staged/haar-moment (default: %(default)s)")
    parser.add_argument("--samples", type=positive_int, default=None, help="sample count (suite-specific default)")
    parser.add_argument("--scale", type=positive_float, default=None, help="importance proposal scale (default: pilot-tuned)")
    parser.add_argument("--reading", choices=["m", "n"], default=None, help="Vandermonde index reading")
    parser.add_argument(
        "--mutate", choices=["none", "drop-detU"], default="none", help="negative-control density (default: %(default)s)"
    )
    parser.add_argument("--chain-length", type=positive_int, default=None, help="forward: MCMC sweeps (default: 10 x samples)")
    parser.add_argument("--burn-in", type=int, default=None, help="forward: adaptive sweeps (default: chain-length / 20)")
    parser.add_argument("--chains", type=positive_int, default=1, help="forward: independent chains (default: %(default)s)")
    parser.add_argument("--perturb", type=float, default=0.0, help="roundtrip: kick size for the negative control")
    parser.add_argument(
        "--format", choices=["json"], default="json", help="reports are JSON only; per-sample CSV comes from sample --extract"
    )
    parser.set_defaults(handler=run, parser_error=parser.error)


def run(args: argparse.Namespace, settings: Settings) -> int:
    samples = args.samples or DEFAULT_SAMPLES[args.suite]
    if args.suite == "normalization":
        report = importance.normalization_check(
            args.n, args.m, samples, args.seed, scale=args.scale, reading=args.reading, mutation=args.mutate
        )
    elif args.suite == "forward":
        report = verify.forward_pushforward_test(
            args.n,
            args.m,
            samples,
            args.seed,
            chain_length=args.chain_length,
            burn_in=args.burn_in,
            chains=args.chains,
            reading=args.reading,
            mutation=args.mutate,
        )
    elif args.suite == "staged":
        if args.k not in (1, 2):
            args.parser_error("staged supports --k 1 or 2")
        report = verify.staged_pushforward_check(args.k, samples, args.seed)
    elif args.suite == "roundtrip":
        report = verify.roundtrip_suite(args.n, args.m, samples, args.seed, perturb=args.perturb)
    elif args.suite == "analytic":
        report = verify.analytic_suite(args.n, args.m, samples, args.seed)
    elif args.suite == "haar-moment":
        report = verify.haar_moment_check(args.k, samples, args.seed)
    else:
        report = importance.importance_self_test(samples, args.seed, scale=args.scale or 1.5)

    emit_artifact(args, settings, report.model_dump(), args.seed)
    logger.info(f"verify {args.suite}: {'PASSED' if report.passed else 'FAILED'}")
    return 0 if report.passed else 1
