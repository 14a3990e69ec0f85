"""
Verification Service
--------------------
Monte Carlo and property suites that confront the closed forms with actual
Haar sampling:

  haar_moment_check          E|tr g|^2 = 1 for the sampler itself
  forward_pushforward_test   Haar extraction vs MCMC on the main density
  staged_pushforward_check   Cayley image of Haar on U(k) vs the Hua density
  roundtrip_suite            extract -> reconstruct -> extract, both paths
  analytic_suite             properties of chi over random realizations

Every sampler loop catches DegenerateSampleError and counts it by reason;
anything else propagates.
"""
from __future__ import annotations

import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy import stats

from haar_radial.config import Settings, get_settings
from haar_radial.errors import DegenerateSampleError, HaarRadialError
from haar_radial.models import (
    AnalyticReport,
    McReportModel,
    PushforwardReport,
    RoundtripReport,
    StatisticResult,
)
from haar_radial.services.charfn import (
    CharFunction,
    char_deriv,
    char_eval,
    det_ratio_parts,
    lemma2_chain,
)
from haar_radial.services.density import DensityMutation, DensityReading, hua_k2_diagonal_moments
from haar_radial.services.matrix_core import (
    BlockUnitary,
    cayley,
    det,
    haar_unitary,
    haar_unitary_batch,
    random_anti_hermitian,
)
from haar_radial.services.mcmc import mcmc_sample
from haar_radial.services.spectral import (
    SpectralData,
    extract_direct,
    extract_via_cayley,
    normalization_residual,
    reconstruct,
    spectral_distance,
)
from haar_radial.utils import batch_means_stderr, map_chunks

logger = logging.getLogger(__name__)

MOMENT_SIGMAS = 3.0
PUSHFORWARD_SIGMAS = 4.0
GOF_MIN_P = 0.01
ROUNDTRIP_TOL = 1e-7
MAX_REJECTION_RATE = 0.01
STAGED_MIN_SAMPLES = 10_000
CIRCLE_POINTS = 20


def _counts(rejections: Counter) -> dict[str, int]:
    return {reason.value: count for reason, count in sorted(rejections.items(), key=lambda kv: kv[0].value)}


# =============================================
# SAMPLER SELF-TEST
# =============================================
def haar_moment_check(k: int, N: int, seed: int, settings: Settings | None = None) -> McReportModel:
    """E|tr g|^2 = 1 on U(k) for every k >= 1."""
    settings = settings or get_settings()
    started = time.perf_counter()

    def chunk(i: int, size: int, rng: np.random.Generator) -> np.ndarray:
        g = haar_unitary_batch(k, size, rng)
        return np.abs(np.trace(g, axis1=1, axis2=2)) ** 2

    values = np.concatenate(map_chunks(chunk, N, seed, settings.chunk_size, settings.threads))
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / np.sqrt(N))
    z = (estimate - 1.0) / std_error
    return McReportModel(
        estimate=estimate,
        std_error=std_error,
        n_samples=N,
        n_attempted=N,
        effective_sample_size=float(N),
        seed=seed,
        wall_time=time.perf_counter() - started,
        passed=bool(abs(z) <= MOMENT_SIGMAS),
        details={"k": k, "z_score": float(z), "target": 1.0},
    )


# =============================================
# FORWARD PUSHFORWARD
# =============================================
StatisticFn = Callable[[SpectralData], float]


def _arg_gaps(sd: SpectralData) -> np.ndarray:
    return sd.args[:-1] - sd.args[1:]


STATISTICS: dict[str, StatisticFn] = {
    "arg_t1": lambda sd: float(sd.args[0]),
    "c1_sq_sum": lambda sd: float(np.sum(sd.C[0, :].real ** 2)),
    "re_tr_u": lambda sd: float(np.trace(sd.U).real),
    "arg_spacing": lambda sd: float(np.mean(_arg_gaps(sd))),
    "arg_spacing_sq": lambda sd: float(np.mean(_arg_gaps(sd) ** 2)),
}
SPACING_STATISTICS = ("arg_spacing", "arg_spacing_sq")


def resolve_statistics(m: int, names: list[str] | None = None) -> list[str]:
    names = list(STATISTICS) if names is None else list(names)
    unknown = [name for name in names if name not in STATISTICS]
    if unknown:
        raise ValueError(f"unknown statistics {unknown}; known: {sorted(STATISTICS)}")
    if m == 1:
        names = [name for name in names if name not in SPACING_STATISTICS]
    return names


def haar_extractions(
    n: int, m: int, N: int, seed: int, settings: Settings | None = None
) -> tuple[list[SpectralData], Counter]:
    """Spectral coordinates of N Haar samples in general position, plus rejection counts by reason."""
    settings = settings or get_settings()

    def chunk(i: int, size: int, rng: np.random.Generator) -> tuple[list[SpectralData], Counter]:
        out, rejected = [], Counter()
        for _ in range(size):
            try:
                out.append(extract_direct(BlockUnitary.haar(n, m, rng), strict_u=True))
            except DegenerateSampleError as e:
                rejected[e.reason] += 1
                logger.debug(f"rejected Haar sample: {e}")
        return out, rejected

    samples, rejected = [], Counter()
    for part, counts in map_chunks(chunk, N, seed, settings.chunk_size, settings.threads):
        samples.extend(part)
        rejected.update(counts)
    return samples, rejected


def _chain_statistics(
    n: int,
    m: int,
    names: list[str],
    chain_length: int,
    burn_in: int,
    seed: int,
    stream: int,
    reading: DensityReading | None,
    mutation: DensityMutation,
) -> tuple[np.ndarray, float]:
    values = np.empty((chain_length, len(names)))
    sampler_out: list = []
    chain = mcmc_sample(
        n, m, chain_length, burn_in, seed, reading=reading, mutation=mutation, sampler_out=sampler_out, stream=stream
    )
    for i, sd in enumerate(chain):
        values[i] = [STATISTICS[name](sd) for name in names]
    return values, sampler_out[0].chain.acceptance_rate


def forward_pushforward_test(
    n: int,
    m: int,
    N: int,
    seed: int,
    statistics: list[str] | None = None,
    chain_length: int | None = None,
    burn_in: int | None = None,
    chains: int = 1,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
    settings: Settings | None = None,
) -> PushforwardReport:
    """
    Each statistic two ways: the empirical mean over extract_direct of N Haar
    samples, and the mean along MCMC chains targeting the main density (the
    mutation applies to the chains only). Passes when every |z| <= 4.
    """
    settings = settings or get_settings()
    started = time.perf_counter()
    names = resolve_statistics(m, statistics)
    chain_length = chain_length or 10 * N
    burn_in = burn_in if burn_in is not None else chain_length // 20

    samples, rejected = haar_extractions(n, m, N, seed, settings)
    haar_values = np.array([[STATISTICS[name](sd) for name in names] for sd in samples])

    with ThreadPoolExecutor(max_workers=max(1, min(chains, settings.threads))) as pool:
        futures = [
            pool.submit(_chain_statistics, n, m, names, chain_length, burn_in, seed, j, reading, mutation)
            for j in range(chains)
        ]
        chain_runs = [f.result() for f in futures]

    results = []
    for col, name in enumerate(names):
        haar_mean = float(np.mean(haar_values[:, col]))
        haar_se = float(np.std(haar_values[:, col], ddof=1) / np.sqrt(len(samples)))
        chain_means = [float(np.mean(values[:, col])) for values, _ in chain_runs]
        chain_ses = [batch_means_stderr(values[:, col]) for values, _ in chain_runs]
        mcmc_mean = float(np.mean(chain_means))
        mcmc_se = float(np.sqrt(np.sum(np.square(chain_ses))) / len(chain_runs))
        z = (haar_mean - mcmc_mean) / float(np.hypot(haar_se, mcmc_se))
        results.append(
            StatisticResult(
                name=name,
                haar_value=haar_mean,
                haar_stderr=haar_se,
                mcmc_value=mcmc_mean,
                mcmc_stderr=mcmc_se,
                z_score=z,
                passed=bool(abs(z) <= PUSHFORWARD_SIGMAS),
            )
        )
        logger.info(f"{name}: haar {haar_mean:.5f}+/-{haar_se:.5f} mcmc {mcmc_mean:.5f}+/-{mcmc_se:.5f} z={z:+.2f}")

    return PushforwardReport(
        n=n,
        m=m,
        seed=seed,
        n_samples=len(samples),
        chain_length=chain_length,
        mutation=mutation,
        statistics=results,
        rejected_by_reason=_counts(rejected),
        acceptance_rates={f"chain_{j}": rate for j, (_, rate) in enumerate(chain_runs)},
        wall_time=time.perf_counter() - started,
        passed=all(r.passed for r in results),
    )


# =============================================
# STAGED (HUA) PUSHFORWARD
# =============================================
def _cayley_coordinates(k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian K with cayley(g) = iK for Haar g, stacked (size, k, k)."""
    out = np.empty((size, k, k), dtype=np.complex128)
    for i in range(size):
        out[i] = -1j * cayley(haar_unitary(k, rng))
    return 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))


def staged_pushforward_check(k: int, N: int, seed: int, settings: Settings | None = None) -> McReportModel:
    """
    k = 1: Kolmogorov-Smirnov test of Im cayley(g) against the standard
    Cauchy law (estimate = fraction with |x| < 1, exactly 1/2 under Cauchy).
    k = 2: arctan moments of both diagonal coordinates against quadrature.
    """
    settings = settings or get_settings()
    if k not in (1, 2):
        raise ValueError(f"staged check supports k in (1, 2), got {k}")
    started = time.perf_counter()
    coords = np.concatenate(
        map_chunks(lambda i, size, rng: _cayley_coordinates(k, size, rng), N, seed, settings.chunk_size, settings.threads)
    )
    flags = []
    if N < STAGED_MIN_SAMPLES:
        flags.append("InsufficientSamples")
        logger.warning(f"staged check with N={N} < {STAGED_MIN_SAMPLES}: wide error bars")

    if k == 1:
        x = coords[:, 0, 0].real
        ks = stats.kstest(x, stats.cauchy.cdf)
        inside = float(np.mean(np.abs(x) < 1.0))
        details = {"k": 1, "ks_statistic": float(ks.statistic), "p_value": float(ks.pvalue), "target": 0.5}
        estimate, std_error = inside, float(np.sqrt(0.25 / N))
        passed = bool(ks.pvalue >= GOF_MIN_P)
    else:
        quad = hua_k2_diagonal_moments()
        z_scores = {}
        for label, diag in (("a", coords[:, 0, 0].real), ("d", coords[:, 1, 1].real)):
            for moment, values in (("arctan", np.arctan(diag)), ("arctan_sq", np.arctan(diag) ** 2)):
                se = float(np.std(values, ddof=1) / np.sqrt(N))
                z_scores[f"{moment}({label})"] = float((np.mean(values) - quad[moment]) / se)
        values = np.arctan(coords[:, 0, 0].real) ** 2
        estimate, std_error = float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(N))
        details = {"k": 2, "quadrature": quad, "z_scores": z_scores, "target": quad["arctan_sq"]}
        passed = all(abs(z) <= PUSHFORWARD_SIGMAS for z in z_scores.values())

    logger.info(f"staged k={k} N={N}: passed={passed} {details}")
    return McReportModel(
        estimate=estimate,
        std_error=std_error,
        n_samples=N,
        n_attempted=N,
        effective_sample_size=float(N),
        seed=seed,
        wall_time=time.perf_counter() - started,
        flags=flags,
        passed=passed,
        details=details,
    )


# =============================================
# ROUND TRIP
# =============================================
def _charfn_distance(f: CharFunction, h: CharFunction) -> float:
    points = np.exp(2j * np.pi * (np.arange(CIRCLE_POINTS) + 0.5) / CIRCLE_POINTS)
    return max(float(np.max(np.abs(char_eval(f, lam) - char_eval(h, lam)))) for lam in points)


def _roundtrip_chunk(n: int, m: int, size: int, rng: np.random.Generator, perturb: float) -> dict:
    out = {"checked": 0, "failures": 0, "rejected": Counter(), "field": 0.0, "charfn": 0.0, "cross": 0.0, "norm": 0.0}
    for _ in range(size):
        g = BlockUnitary.haar(n, m, rng)
        try:
            sd = extract_direct(g, strict_u=True)
        except DegenerateSampleError as e:
            out["rejected"][e.reason] += 1
            continue
        out["checked"] += 1
        try:
            rebuilt = reconstruct(sd)
            if perturb:
                kick = sla.expm(perturb * random_anti_hermitian(n + m, rng))
                rebuilt = BlockUnitary(kick @ rebuilt.g, n, m)
            again = extract_direct(rebuilt, strict_u=True)
            other = extract_via_cayley(g)
        except HaarRadialError as e:
            logger.debug(f"round trip broke on a general-position sample: {e}")
            out["failures"] += 1
            continue
        f = CharFunction(g)
        errors = {
            "field": spectral_distance(sd, again),
            "charfn": _charfn_distance(f, CharFunction(rebuilt)),
            "cross": spectral_distance(sd, other),
            "norm": normalization_residual(sd, f),
        }
        for key, value in errors.items():
            out[key] = max(out[key], value)
        if max(errors["field"], errors["charfn"], errors["cross"]) > ROUNDTRIP_TOL or errors["norm"] > 1e-8:
            out["failures"] += 1
    return out


def roundtrip_suite(
    n: int, m: int, N: int, seed: int, perturb: float = 0.0, settings: Settings | None = None
) -> RoundtripReport:
    """
    extract_direct -> reconstruct -> extract_direct on N Haar samples, plus
    agreement of the characteristic functions on circle points and of the two
    extraction paths. ``perturb`` kicks the reconstruction by expm(perturb * K).
    """
    settings = settings or get_settings()
    started = time.perf_counter()
    parts = map_chunks(
        lambda i, size, rng: _roundtrip_chunk(n, m, size, rng, perturb), N, seed, settings.chunk_size, settings.threads
    )
    rejected = Counter()
    for part in parts:
        rejected.update(part["rejected"])
    checked = sum(p["checked"] for p in parts)
    failures = sum(p["failures"] for p in parts)
    rejection_rate = (N - checked) / N if N else 0.0
    if rejection_rate > MAX_REJECTION_RATE:
        logger.warning(f"degenerate rejection rate {rejection_rate:.3%} above {MAX_REJECTION_RATE:.0%}")
    report = RoundtripReport(
        n=n,
        m=m,
        seed=seed,
        n_attempted=N,
        n_checked=checked,
        rejected_by_reason=_counts(rejected),
        failures=failures,
        max_field_error=max(p["field"] for p in parts),
        max_charfn_error=max(p["charfn"] for p in parts),
        max_cross_path_error=max(p["cross"] for p in parts),
        max_normalization_error=max(p["norm"] for p in parts),
        perturbation=perturb,
        wall_time=time.perf_counter() - started,
        passed=failures == 0 and checked > 0 and rejection_rate <= MAX_REJECTION_RATE,
    )
    logger.info(f"roundtrip n={n} m={m}: {checked}/{N} checked, {failures} failures, passed={report.passed}")
    return report


# =============================================
# ANALYTIC PROPERTIES OF CHI
# =============================================
ANALYTIC_THRESHOLDS = {
    "unitarity": 1e-9,
    "contractivity": 1e-9,
    "det_ratio": 1e-9,
    "degree": 1e-9,
    "lemma2": 1e-9,
    "derivative": 1e-6,
}


def _polynomial_excess(poly: Callable[[complex], complex], degree: int, samples: int) -> float:
    """Largest coefficient above ``degree`` relative to the largest one, by DFT on roots of unity."""
    roots = np.exp(2j * np.pi * np.arange(samples) / samples)
    # no aliasing while samples exceeds the true degree
    coeffs = np.fft.fft([poly(z) for z in roots]) / samples
    return float(np.max(np.abs(coeffs[degree + 1 :])) / np.max(np.abs(coeffs)))


def _analytic_errors(g: BlockUnitary, rng: np.random.Generator) -> dict[str, float]:
    f = CharFunction(g)
    n, m = g.n, g.m
    on_circle = np.exp(2j * np.pi * rng.uniform(size=10))
    inside = np.sqrt(rng.uniform(0.0, 0.81, size=3)) * np.exp(2j * np.pi * rng.uniform(size=3))
    errors = dict.fromkeys(ANALYTIC_THRESHOLDS, 0.0)

    for lam in on_circle:
        chi = char_eval(f, lam)
        errors["unitarity"] = max(errors["unitarity"], float(np.max(np.abs(chi.conj().T @ chi - np.eye(n)))))
        errors["lemma2"] = max(errors["lemma2"], float(np.max(np.abs(lemma2_chain(g, lam) - chi))))

    h = 1e-6
    for lam in inside:
        norm = float(np.linalg.norm(char_eval(f, lam), 2))
        errors["contractivity"] = max(errors["contractivity"], norm - 1.0)
        num, den = det_ratio_parts(f, lam)
        exact = det(char_eval(f, lam))
        errors["det_ratio"] = max(errors["det_ratio"], abs(num / den - exact) / max(abs(exact), 1e-300))
        fd = (char_eval(f, lam + h) - char_eval(f, lam - h)) / (2 * h)
        errors["derivative"] = max(errors["derivative"], float(np.max(np.abs(fd - char_deriv(f, lam)))))

    samples = n + m + 2
    numerator = lambda z: det_ratio_parts(f, z)[0]
    denominator = lambda z: det_ratio_parts(f, z)[1]
    errors["degree"] = max(
        _polynomial_excess(numerator, m, samples), _polynomial_excess(denominator, m, samples)
    )
    return errors


def analytic_suite(
    n: int, m: int, realizations: int, seed: int, settings: Settings | None = None
) -> AnalyticReport:
    """
    Unitarity on the circle, contractivity inside the disk, the determinant
    ratio, the degree bound on its numerator and denominator, the Cayley chain
    identity and char_deriv against central differences, over Haar realizations.
    """
    settings = settings or get_settings()
    started = time.perf_counter()

    def chunk(i: int, size: int, rng: np.random.Generator) -> dict[str, float]:
        worst = dict.fromkeys(ANALYTIC_THRESHOLDS, 0.0)
        for _ in range(size):
            for key, value in _analytic_errors(BlockUnitary.haar(n, m, rng), rng).items():
                worst[key] = max(worst[key], value)
        return worst

    worst = dict.fromkeys(ANALYTIC_THRESHOLDS, 0.0)
    for part in map_chunks(chunk, realizations, seed, settings.chunk_size, settings.threads):
        for key, value in part.items():
            worst[key] = max(worst[key], value)
    passed = all(worst[key] <= limit for key, limit in ANALYTIC_THRESHOLDS.items())
    logger.info(f"analytic n={n} m={m}: {worst} passed={passed}")
    return AnalyticReport(
        n=n,
        m=m,
        seed=seed,
        realizations=realizations,
        max_errors=worst,
        thresholds=ANALYTIC_THRESHOLDS,
        wall_time=time.perf_counter() - started,
        passed=passed,
    )
