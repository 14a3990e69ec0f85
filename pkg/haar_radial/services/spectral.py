"""
Spectral Coordinates Service
----------------------------
Coordinates (t, C, U) of a conjugacy class of U(n+m) under U(m):

  * t_k  - the m points of the unit circle where chi(t_k) has eigenvalue -1,
           ordered by strictly decreasing argument in (0, 2*pi);
  * c_k  - the eigenvector of chi(t_k) for -1, scaled so that
           <chi'(t_k) c_k, c_k> = -1/t_k and rotated so c_k^1 > 0;
  * U    - chi(-1).

Two independent extraction paths (a generalized eigenproblem on the
realization pencil, and the Cayley chain through H = cayley(g)) and the
inverse map back to a canonical block unitary representative.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from haar_radial.config import get_settings
from haar_radial.errors import (
    DegenerateReason,
    DegenerateSampleError,
    DegenerateSpectrumError,
    ReconstructionError,
    SingularityError,
)
from haar_radial.services.charfn import CharFunction, char_deriv, char_eval
from haar_radial.services.matrix_core import (
    BlockUnitary,
    as_matrix,
    cayley,
    hermitian_eig,
    smallest_singular_value,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
KERNEL_IMAG_TOL = 1e-6  # relative bound on Im t<chi'(t)v, v>


@dataclass(frozen=True)
class SpectralData:
    t: np.ndarray  # (m,) unit-modulus, decreasing argument
    C: np.ndarray  # (n, m), columns c_k, first row real positive
    U: np.ndarray  # (n, n) unitary

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.complex128).reshape(-1).copy()
        c = as_matrix(self.C).copy()
        u = as_matrix(self.U).copy()
        if c.shape[1] != t.size or u.shape != (c.shape[0], c.shape[0]):
            raise ValueError(f"inconsistent shapes t={t.shape}, C={c.shape}, U={u.shape}")
        for arr in (t, c, u):
            arr.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "U", u)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.t.size

    @property
    def args(self) -> np.ndarray:
        """Arguments of t in [0, 2*pi)."""
        return np.mod(np.angle(self.t), TWO_PI)


def spectral_distance(a: SpectralData, b: SpectralData) -> float:
    """Max fieldwise absolute difference; inf when the shapes disagree."""
    if a.t.shape != b.t.shape or a.C.shape != b.C.shape:
        return float("inf")
    return float(
        max(
            np.max(np.abs(a.t - b.t)),
            np.max(np.abs(a.C - b.C)),
            np.max(np.abs(a.U - b.U)),
        )
    )


# =============================================
# CANONICAL FORM
# =============================================
def _fix_phases(c: np.ndarray, tol: float) -> np.ndarray:
    c = c.copy()
    first = c[0, :]
    mag = np.abs(first)
    if np.any(mag < tol):
        raise DegenerateSampleError(
            DegenerateReason.ZERO_FIRST_COORDINATE, f"min |c_k^1| = {float(np.min(mag)):.3e}"
        )
    c *= (first.conj() / mag)[np.newaxis, :]
    c[0, :] = mag
    return c


def canonicalize(t, C, U) -> SpectralData:
    """
    Sort t by strictly decreasing argument in (0, 2*pi), permute the columns
    of C with it and rotate each column so its first coordinate is real positive.
    """
    settings = get_settings()
    t = np.asarray(t, dtype=np.complex128).reshape(-1)
    c = as_matrix(C)
    if np.any(np.abs(np.abs(t) - 1.0) > settings.tol_degenerate):
        raise ValueError("canonicalize: t must lie on the unit circle")
    t = t / np.abs(t)
    args = np.mod(np.angle(t), TWO_PI)
    edge = settings.tol_boundary
    if np.any(args < edge) or np.any(args > TWO_PI - edge):
        raise DegenerateSampleError(DegenerateReason.TIE_OR_BOUNDARY, "arg t_k at the chart boundary 0")
    order = np.argsort(-args, kind="stable")
    args = args[order]
    if args.size > 1 and float(np.min(args[:-1] - args[1:])) < edge:
        raise DegenerateSampleError(DegenerateReason.TIE_OR_BOUNDARY, "tied arguments")
    c = _fix_phases(c[:, order], settings.tol_degenerate)
    return SpectralData(t=t[order], C=c, U=as_matrix(U))


def canonical_db(d: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Canonical form of the pair (D, B) under U(m): D -> diag(mu) with mu
    descending, B -> B V, then the residual torus makes the first row of B V
    real and positive.
    """
    settings = get_settings()
    try:
        mu, v = hermitian_eig(d)
    except DegenerateSpectrumError as e:
        raise DegenerateSampleError(DegenerateReason.EIG_COLLISION, str(e)) from e
    return mu, _fix_phases(as_matrix(b) @ v, settings.tol_degenerate)


def unit_circle_delta_eigenvalues(g: BlockUnitary, tol: float | None = None) -> list[complex]:
    """Eigenvalues of delta on the unit circle: the extra invariants of the split stratum."""
    tol = get_settings().tol_degenerate if tol is None else tol
    eig = sla.eigvals(g.delta)
    return [complex(e) for e in eig if abs(abs(e) - 1.0) < tol]


def _require_general_position(g: BlockUnitary) -> None:
    extra = unit_circle_delta_eigenvalues(g)
    if extra:
        raise DegenerateSampleError(
            DegenerateReason.UNIT_CIRCLE_DELTA, f"{len(extra)} eigenvalue(s) of delta on |z|=1"
        )


def _require_u_regular(u: np.ndarray) -> None:
    sv = smallest_singular_value(np.eye(u.shape[0]) + u)
    if sv < get_settings().tol_degenerate:
        raise DegenerateSampleError(DegenerateReason.U_PLUS_ONE_SINGULAR, f"sigma_min(1+U) = {sv:.3e}")


def _require_separated(t: np.ndarray) -> None:
    if t.size < 2:
        return
    args = np.sort(np.mod(np.angle(t), TWO_PI))
    gaps = np.diff(np.concatenate([args, [args[0] + TWO_PI]]))
    if float(np.min(gaps)) < get_settings().tol_degenerate:
        raise DegenerateSampleError(DegenerateReason.EIG_COLLISION, f"min arg gap {float(np.min(gaps)):.3e}")


# =============================================
# EXTRACTION: DIRECT PATH
# =============================================
def minus_one_points(g: BlockUnitary) -> np.ndarray:
    """
    Points t with det(chi(t) + 1) = 0, as the finite generalized eigenvalues of
    [[alpha + 1, 0], [gamma, 1]] v = t [[0, beta], [0, delta]] v.
    """
    n, m = g.n, g.m
    a0 = np.block([[g.alpha + np.eye(n), np.zeros((n, m))], [g.gamma, np.eye(m)]])
    a1 = np.block([[np.zeros((n, n)), g.beta], [np.zeros((m, n)), g.delta]])
    ab = sla.eigvals(a0, a1, homogeneous_eigvals=True)
    num, den = ab[0], ab[1]
    # the m eigenvalues with the largest |den|/|num| are the finite ones
    ratio = np.abs(den) / np.maximum(np.abs(num), np.finfo(float).tiny)
    finite = np.argsort(-ratio)[:m]
    if np.any(np.abs(den[finite]) < 1e-12 * np.maximum(np.abs(num[finite]), 1.0)):
        raise DegenerateSampleError(DegenerateReason.KERNEL_DIMENSION, "fewer than m finite points")
    t = num[finite] / den[finite]
    off = np.abs(np.abs(t) - 1.0)
    if float(np.max(off)) > 1e-6:
        raise DegenerateSampleError(DegenerateReason.KERNEL_DIMENSION, f"point off the circle by {float(np.max(off)):.3e}")
    return t / np.abs(t)


def _normalized_kernel_vector(f: CharFunction, t_k: complex) -> np.ndarray:
    settings = get_settings()
    _, s, vh = sla.svd(char_eval(f, t_k) + np.eye(f.n))
    if s[-1] > settings.tol_certify:
        raise DegenerateSampleError(
            DegenerateReason.KERNEL_DIMENSION, f"chi(t)+1 not singular at t={t_k:.6f} (sigma={s[-1]:.3e})"
        )
    if s.size > 1 and s[-2] < settings.tol_degenerate:
        raise DegenerateSampleError(DegenerateReason.KERNEL_DIMENSION, f"kernel of chi(t)+1 is not one-dimensional")
    v = vh[-1].conj()
    # t <chi'(t) v, v> is a negative real number; its modulus fixes |c|
    scaled = t_k * np.vdot(v, char_deriv(f, t_k) @ v)
    if scaled.real >= 0:
        raise DegenerateSampleError(DegenerateReason.KERNEL_DIMENSION, f"t<chi'v,v> = {scaled:.3e} is not negative")
    if abs(scaled.imag) > KERNEL_IMAG_TOL * abs(scaled):
        raise DegenerateSampleError(
            DegenerateReason.KERNEL_DIMENSION, f"t<chi'v,v> = {scaled:.3e} has a non-real residue"
        )
    return v / np.sqrt(-scaled.real)


def extract_direct(g: BlockUnitary, strict_u: bool = False) -> SpectralData:
    """
    Coordinates read off chi itself. With ``strict_u`` a singular 1 + U is
    rejected as UPlusOneSingular; otherwise U = chi(-1) is returned as is and
    only reconstruct/density refuse it.
    """
    _require_general_position(g)
    f = CharFunction(g)
    t = minus_one_points(g)
    _require_separated(t)
    c = np.column_stack([_normalized_kernel_vector(f, t_k) for t_k in t])
    u = char_eval(f, -1.0)
    if strict_u:
        _require_u_regular(u)
    return canonicalize(t, c, u)


# =============================================
# EXTRACTION: CAYLEY CHAIN
# =============================================
def extract_via_cayley(g: BlockUnitary) -> SpectralData:
    """
    H = cayley(g) = i [[A, B], [B*, D]]; D = V diag(mu) V*; the columns b_k
    of B V give c_k = (1 + t_k) b_k / 2 with t_k = (1 + i mu_k)/(1 - i mu_k),
    and U = cayley(iA).
    """
    _require_general_position(g)
    n = g.n
    k = -1j * cayley(g.g, stage="cayley(g)")
    k = 0.5 * (k + k.conj().T)
    a, b, d = k[:n, :n], k[:n, n:], k[n:, n:]
    try:
        mu, v = hermitian_eig(d)
    except DegenerateSpectrumError as e:
        raise DegenerateSampleError(DegenerateReason.EIG_COLLISION, str(e)) from e
    t = (1.0 + 1j * mu) / (1.0 - 1j * mu)
    _require_separated(t)
    c = 0.5 * (b @ v) * (1.0 + t)[np.newaxis, :]
    u = cayley(1j * a, stage="cayley(iA)")
    _require_u_regular(u)
    return canonicalize(t, c, u)


# =============================================
# RECONSTRUCTION
# =============================================
def reconstruct(sd: SpectralData) -> BlockUnitary:
    """Canonical block unitary representative of the class with coordinates ``sd``."""
    settings = get_settings()
    n, m = sd.n, sd.m
    one_plus_t = 1.0 + sd.t
    if np.any(np.abs(one_plus_t) <= settings.tol_boundary):
        raise ReconstructionError("t_k = -1: the Cayley coordinate mu_k is infinite")
    mu = np.real((sd.t - 1.0) / (1j * one_plus_t))
    b = 2.0 * sd.C / one_plus_t[np.newaxis, :]
    b = b * (b[0, :].conj() / np.abs(b[0, :]))[np.newaxis, :]
    try:
        ia = cayley(sd.U, stage="cayley(U)")
    except SingularityError as e:
        raise ReconstructionError("1 + U is singular") from e
    a = -1j * ia
    a = 0.5 * (a + a.conj().T)
    k = np.block([[a, b], [b.conj().T, np.diag(mu)]])
    return BlockUnitary(cayley(1j * k, stage="cayley(H)"), n, m)


# =============================================
# INVARIANT CHECKS
# =============================================
def normalization_residual(sd: SpectralData, f: CharFunction) -> float:
    """max_k |t_k <chi'(t_k) c_k, c_k> + 1|."""
    worst = 0.0
    for t_k, c_k in zip(sd.t, sd.C.T):
        value = t_k * np.vdot(c_k, char_deriv(f, t_k) @ c_k)
        worst = max(worst, abs(value + 1.0))
    return worst


def invariant_violations(sd: SpectralData, f: CharFunction | None = None) -> list[str]:
    """Names of the SpectralData invariants that ``sd`` violates (empty when valid)."""
    settings = get_settings()
    problems = []
    if np.any(np.abs(np.abs(sd.t) - 1.0) > settings.tol_unitarity):
        problems.append("t off the unit circle")
    args = sd.args
    if np.any(args <= 0) or (args.size > 1 and np.any(np.diff(args) >= 0)):
        problems.append("arguments not strictly decreasing in (0, 2pi)")
    first = sd.C[0, :]
    if np.any(np.abs(first.imag) > 1e-12) or np.any(first.real <= 0):
        problems.append("first row of C not real positive")
    if np.max(np.abs(sd.U.conj().T @ sd.U - np.eye(sd.n))) > settings.tol_unitarity:
        problems.append("U not unitary")
    if smallest_singular_value(np.eye(sd.n) + sd.U) < settings.tol_singular:
        problems.append("1 + U singular")
    if f is not None and normalization_residual(sd, f) > 1e-8:
        problems.append("normalization <chi'(t)c, c> = -1/t violated")
    return problems
