"""
Density Service
---------------
Closed-form densities in natural-log scale, each tagged with the reference
measure it is taken against:

  MAIN_SPECTRAL  radial part of Haar on U(n+m) in the coordinates (t, C, U)
  HUA_LEBESGUE   Cayley pushforward of Haar on U(k)
  WEYL_LEBESGUE  eigenvalue factor dw^m of Lebesgue measure on Hermitian m x m
  ABM_LEBESGUE   intermediate density of (A, B, M) after diagonalising D

MAIN_SPECTRAL is dsigma_n(U) prod_k d((c_k^1)^2) prod_{k, j>=2} dRe c_k^j dIm c_k^j
prod_k dtheta_k over labelled angles in (0, 2 pi)^m. Both conventions match the
Weyl factor: the radial coordinate enters squared, and configurations are
counted with all m! labellings. On the ordered chart used by extraction the
law of (t, C, U) is therefore m! prod_k 2 c_k^1 times the main density
against dc_k^1 dtheta_k (chart_log_density).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from haar_radial.config import get_settings
from haar_radial.errors import DomainError, SingularityError
from haar_radial.services.matrix_core import (
    as_matrix,
    is_anti_hermitian,
    is_hermitian,
    log_abs_det,
    log_block_det,
)
from haar_radial.services.spectral import SpectralData

logger = logging.getLogger(__name__)

LOG_PI = float(np.log(np.pi))
LOG_2 = float(np.log(2.0))

DensityReading = Literal["m", "n"]
DensityMutation = Literal["none", "drop-detU"]


class ReferenceMeasure(str, Enum):
    MAIN_SPECTRAL = "MAIN_SPECTRAL"
    HUA_LEBESGUE = "HUA_LEBESGUE"
    WEYL_LEBESGUE = "WEYL_LEBESGUE"
    ABM_LEBESGUE = "ABM_LEBESGUE"


@dataclass(frozen=True)
class DensityValue:
    log_value: float
    reference: ReferenceMeasure


def _log_factorials(upto: int) -> float:
    """sum_{j=1}^{upto} log j!  (0 for an empty product)."""
    if upto < 1:
        return 0.0
    return float(np.sum(gammaln(np.arange(2, upto + 2))))


# =============================================
# CONSTANTS
# =============================================
def log_theta_const(n: int, m: int) -> float:
    """log of 2^{-m} pi^{-mn} prod_{j<=m+n-1} j! / (prod_{j<=n-1} j! prod_{j<=m} j!)."""
    if n < 1 or m < 1:
        raise ValueError(f"n, m must be >= 1, got n={n}, m={m}")
    return (
        -m * LOG_2
        - m * n * LOG_PI
        + _log_factorials(m + n - 1)
        - _log_factorials(n - 1)
        - _log_factorials(m)
    )


def theta_const(n: int, m: int) -> float:
    return float(np.exp(log_theta_const(n, m)))


def log_hua_const(k: int) -> float:
    """log tau_k, tau_k = 2^{k^2-k} pi^{-k(k+1)/2} prod_{j<=k-1} j!."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (k * k - k) * LOG_2 - 0.5 * k * (k + 1) * LOG_PI + _log_factorials(k - 1)


def log_weyl_const(m: int) -> float:
    """log of pi^{m(m-1)/2} / prod_{j<=m} j!."""
    return 0.5 * m * (m - 1) * LOG_PI - _log_factorials(m)


def _log_vandermonde(x: np.ndarray) -> float:
    """sum_{k<l} log |x_k - x_l|^2."""
    if x.size < 2:
        return 0.0
    k, l = np.triu_indices(x.size, 1)
    return float(2.0 * np.sum(np.log(np.abs(x[k] - x[l]))))


# =============================================
# THE RADIAL DENSITY
# =============================================
def main_log_density(
    sd: SpectralData,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
) -> DensityValue:
    """
    theta_{n,m} |det(1 + T + C*(1+U)C)|^{-2n-2m} |det(1+U)|^{2m}
        prod_k |1+t_k|^{2m+2n} prod_{k<l} |t_k - t_l|^2

    against dsigma_n(U) prod_k d((c_k^1)^2) prod_{k, j>=2} dRe c_k^j dIm c_k^j prod_k dtheta_k,
    angles labelled (see the module docstring).

    ``reading="n"`` restricts the Vandermonde product to the first min(n, m)
    points (the literal upper index n). ``mutation="drop-detU"`` omits the
    |det(1+U)|^{2m} factor; both exist for negative controls.
    """
    reading = get_settings().density_reading if reading is None else reading
    n, m = sd.n, sd.m
    one_plus_t = 1.0 + sd.t
    if np.any(np.abs(one_plus_t) <= 1e-12):
        raise DomainError("|1 + t_k| vanishes")
    one_plus_u = np.eye(n) + sd.U
    core = np.diag(one_plus_t) + sd.C.conj().T @ one_plus_u @ sd.C
    try:
        log_core, _ = log_abs_det(core, stage="det(1+T+C*(1+U)C)")
        log_u, _ = log_abs_det(one_plus_u, stage="det(1+U)")
    except SingularityError as e:
        raise DomainError(str(e)) from e
    if not np.isfinite(log_core) or not np.isfinite(log_u):
        raise DomainError("determinant underflow")

    vander_points = sd.t if reading == "m" else sd.t[: min(n, m)]
    value = (
        log_theta_const(n, m)
        - (2 * n + 2 * m) * log_core
        + (2 * n + 2 * m) * float(np.sum(np.log(np.abs(one_plus_t))))
        + _log_vandermonde(vander_points)
    )
    if mutation != "drop-detU":
        value += 2 * m * log_u
    return DensityValue(value, ReferenceMeasure.MAIN_SPECTRAL)


def main_log_density_batch(
    t: np.ndarray,
    c: np.ndarray,
    u: np.ndarray,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
) -> np.ndarray:
    """
    Vectorised main_log_density over a leading batch axis: t (N, m),
    c (N, n, m), u (N, n, n). Points outside the domain get -inf instead of
    raising, so Monte Carlo sums stay well defined.
    """
    reading = get_settings().density_reading if reading is None else reading
    _, n, m = c.shape
    one_plus_t = 1.0 + t
    one_plus_u = np.eye(n)[np.newaxis] + u
    core = np.einsum("bjk,bjl,blm->bkm", c.conj(), one_plus_u, c)
    core[:, np.arange(m), np.arange(m)] += one_plus_t
    with np.errstate(divide="ignore", invalid="ignore"):
        _, log_core = np.linalg.slogdet(core)
        _, log_u = np.linalg.slogdet(one_plus_u)
        log_one_plus_t = np.log(np.abs(one_plus_t))
        value = log_theta_const(n, m) - (2 * n + 2 * m) * log_core
        value = value + (2 * n + 2 * m) * np.sum(log_one_plus_t, axis=1)
        k_max = m if reading == "m" else min(n, m)
        if k_max > 1:
            k, l = np.triu_indices(k_max, 1)
            value = value + 2.0 * np.sum(np.log(np.abs(t[:, k] - t[:, l])), axis=1)
        if mutation != "drop-detU":
            value = value + 2 * m * log_u
    bad = ~np.isfinite(value) | np.any(np.abs(one_plus_t) <= 1e-12, axis=1)
    value[bad] = -np.inf
    return value


# =============================================
# ORDERED CHART
# =============================================
def log_chart_factor(c_first: np.ndarray) -> np.ndarray:
    """
    log(m! prod_k 2 c_k^1) over the last axis of the first-row coordinates:
    the Jacobian from the main reference measure to dc_k^1 dtheta_k on the
    ordered chart. -inf where some c_k^1 <= 0.
    """
    c_first = np.asarray(c_first, dtype=float)
    m = c_first.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(c_first > 0, np.log(2.0 * np.abs(c_first)), -np.inf)
    return float(gammaln(m + 1)) + np.sum(logs, axis=-1)


def chart_log_density(
    sd: SpectralData,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
) -> float:
    """Log-density of the law of (t, C, U) on the ordered chart; raises DomainError like main_log_density."""
    radial = float(log_chart_factor(sd.C[0, :].real))
    if not np.isfinite(radial):
        raise DomainError("first coordinates c_k^1 must be positive")
    return main_log_density(sd, reading=reading, mutation=mutation).log_value + radial


def chart_log_density_batch(
    t: np.ndarray,
    c: np.ndarray,
    u: np.ndarray,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
) -> np.ndarray:
    return main_log_density_batch(t, c, u, reading=reading, mutation=mutation) + log_chart_factor(c[:, 0, :].real)


# =============================================
# PROOF-STAGE DENSITIES
# =============================================
def hua_log_density(x: np.ndarray, k: int) -> DensityValue:
    """tau_k det(1 - X^2)^{-k} for anti-Hermitian X, against Lebesgue on its k^2 real coordinates."""
    x = as_matrix(x)
    if x.shape != (k, k):
        raise ValueError(f"X has shape {x.shape}, expected {(k, k)}")
    if not is_anti_hermitian(x):
        raise ValueError("hua_log_density: X must be anti-Hermitian")
    log_det, _ = log_abs_det(np.eye(k) - x @ x)
    return DensityValue(log_hua_const(k) - k * log_det, ReferenceMeasure.HUA_LEBESGUE)


def weyl_log_density(mu) -> DensityValue:
    """log of pi^{m(m-1)/2} / prod j! * prod_{k<l} |mu_k - mu_l|^2 for descending mu."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size > 1 and np.any(np.diff(mu) >= 0):
        raise DomainError("mu must be strictly descending")
    return DensityValue(log_weyl_const(mu.size) + _log_vandermonde(mu), ReferenceMeasure.WEYL_LEBESGUE)


def abm_log_density(a: np.ndarray, b: np.ndarray, mu) -> DensityValue:
    """tau_{n+m} |det(1 + i [[A, B], [B*, M]])|^{-2n-2m} dw_m(M), M = diag(mu)."""
    a, b = as_matrix(a), as_matrix(b)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    n, m = a.shape[0], mu.size
    if b.shape != (n, m):
        raise ValueError(f"B has shape {b.shape}, expected {(n, m)}")
    if not is_hermitian(a):
        raise ValueError("abm_log_density: A must be Hermitian")
    try:
        log_det, _ = log_block_det(
            np.eye(n) + 1j * a, 1j * b, 1j * b.conj().T, np.eye(m) + 1j * np.diag(mu)
        )
    except SingularityError as e:
        raise DomainError(str(e)) from e
    if not np.isfinite(log_det):
        raise DomainError("determinant underflow")
    value = log_hua_const(n + m) - (2 * n + 2 * m) * log_det + weyl_log_density(mu).log_value
    return DensityValue(value, ReferenceMeasure.ABM_LEBESGUE)


# =============================================
# HUA k = 2 DIAGONAL MARGINAL
# =============================================
def _eigen_weight(x: float, power: int) -> float:
    """x^power (1 + x^2)^{-2}: one eigenvalue's share of det(1 + K^2)^{-2}."""
    return x**power / (1.0 + x * x) ** 2


def hua_k2_diagonal_density(a: float, epsrel: float = 1e-10) -> float:
    """
    Density of a diagonal entry of K, X = i K, under the k = 2 Hua density.
    With K = V diag(lam) V*, Lebesgue measure is w_2 (lam_1 - lam_2)^2 dlam dV
    and a = s lam_1 + (1 - s) lam_2 with s = |V_11|^2 uniform on [0, 1], so

        p(a) = 2 tau_2 w_2 (A_1 B_0 - A_0 B_1),

    A_j = int_a^inf, B_j = int_-inf^a of lam^j (1 + lam^2)^{-2} dlam.
    """
    moments = []
    for lo, hi in ((a, np.inf), (-np.inf, a)):
        for power in (0, 1):
            value, _ = integrate.quad(_eigen_weight, lo, hi, args=(power,), epsabs=1e-14, epsrel=epsrel)
            moments.append(value)
    a0, a1, b0, b1 = moments
    const = float(np.exp(log_hua_const(2) + log_weyl_const(2)))
    return 2.0 * const * (a1 * b0 - a0 * b1)


def hua_k2_diagonal_moments(epsrel: float = 1e-10) -> dict[str, float]:
    """Total mass and the normalized moments E[arctan a], E[arctan^2 a] of the diagonal marginal."""
    out = {}
    for key, fn in (("mass", lambda a: 1.0), ("arctan", np.arctan), ("arctan_sq", lambda a: np.arctan(a) ** 2)):
        out[key], _ = integrate.quad(
            lambda a: fn(a) * hua_k2_diagonal_density(a, epsrel), -np.inf, np.inf, epsabs=1e-13, epsrel=epsrel, limit=200
        )
    out["arctan"] /= out["mass"]
    out["arctan_sq"] /= out["mass"]
    return out
