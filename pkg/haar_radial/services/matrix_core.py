"""
Matrix Core
-----------
Dense complex matrix plumbing shared by every other service: Haar sampling,
the Cayley transform, ordered Hermitian eigendecompositions, LU-based
log-determinants and the (n, m) block partition of a unitary matrix.

Matrices are plain ``numpy`` complex128 arrays; nothing here mutates its inputs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from haar_radial.config import get_settings
from haar_radial.errors import DegenerateSpectrumError, NotUnitaryError, SingularityError

logger = logging.getLogger(__name__)


def as_matrix(x) -> np.ndarray:
    """Coerce scalars, nested lists and arrays to a 2-D complex128 array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {arr.shape}")
    return arr


def max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def is_unitary(g: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().tol_unitarity if tol is None else tol
    g = as_matrix(g)
    if g.shape[0] != g.shape[1]:
        return False
    return max_abs(g.conj().T @ g - np.eye(g.shape[0])) <= tol


def is_hermitian(h: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().tol_hermitian if tol is None else tol
    h = as_matrix(h)
    return h.shape[0] == h.shape[1] and max_abs(h - h.conj().T) <= tol


def is_anti_hermitian(x: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().tol_hermitian if tol is None else tol
    x = as_matrix(x)
    return x.shape[0] == x.shape[1] and max_abs(x + x.conj().T) <= tol


def smallest_singular_value(a: np.ndarray) -> float:
    return float(sla.svdvals(as_matrix(a))[-1])


# =============================================
# HAAR SAMPLING
# =============================================
def standard_normal_complex(rng: np.random.Generator, size) -> np.ndarray:
    """``(R + 1j*I)/sqrt(2)`` with independent standard normal R, I (unit variance)."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def haar_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw a k x k unitary matrix from the probability Haar measure.

    Ginibre fill, QR, then rescale the columns of Q by the phases of diag(R)
    so the triangular factor has a positive real diagonal. Without the phase
    step the law of Q depends on the QR implementation and is not Haar.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    z = standard_normal_complex(rng, (k, k))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[np.newaxis, :]


def haar_unitary_batch(k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Haar unitaries stacked as (size, k, k); same recipe as haar_unitary."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    z = standard_normal_complex(rng, (size, k, k))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, np.newaxis, :]


def random_anti_hermitian(k: int, rng: np.random.Generator) -> np.ndarray:
    """i times a GUE-like Hermitian matrix; entries of unit scale."""
    z = standard_normal_complex(rng, (k, k))
    return 0.5j * (z + z.conj().T)


# =============================================
# CAYLEY TRANSFORM
# =============================================
def cayley(m: np.ndarray, stage: str = "cayley", tol: float | None = None) -> np.ndarray:
    """
    g -> -1 + 2(1 + g)^{-1}.

    An involution exchanging unitary and anti-Hermitian matrices. Raises
    SingularityError when 1 + g is numerically singular, i.e. g has eigenvalue -1.
    """
    tol = get_settings().tol_singular if tol is None else tol
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"cayley needs a square matrix, got {m.shape}")
    eye = np.eye(m.shape[0], dtype=np.complex128)
    one_plus = eye + m
    sv = smallest_singular_value(one_plus)
    if sv < tol:
        raise SingularityError(stage, sv)
    return -eye + 2.0 * sla.solve(one_plus, eye)


# =============================================
# HERMITIAN EIGENPROBLEM
# =============================================
def hermitian_eig(h: np.ndarray, gap_tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues of a Hermitian matrix in strictly descending order, with the
    unitary matrix of eigenvectors as columns: h = V diag(mu) V*.
    """
    settings = get_settings()
    gap_tol = settings.tol_eig_gap if gap_tol is None else gap_tol
    h = as_matrix(h)
    if not is_hermitian(h):
        raise ValueError("hermitian_eig: input is not Hermitian")
    # Symmetrize away the roundoff part before LAPACK sees it
    mu, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    mu = mu[::-1]
    v = v[:, ::-1]
    if mu.size > 1:
        min_gap = float(np.min(mu[:-1] - mu[1:]))
        if min_gap < gap_tol:
            raise DegenerateSpectrumError(min_gap)
    return mu, v


# =============================================
# DETERMINANTS
# =============================================
def log_abs_det(a: np.ndarray, stage: str = "det") -> tuple[float, complex]:
    """
    (log|det a|, det a / |det a|) from a partially pivoted LU factorization.
    Stays finite where the determinant itself would under- or overflow.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"determinant of a non-square matrix {a.shape}")
    lu, piv = sla.lu_factor(a, check_finite=True)
    diag = np.diagonal(lu)
    absd = np.abs(diag)
    if np.any(absd == 0.0):
        raise SingularityError(stage, 0.0)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    phase = complex(np.prod(diag / absd)) * (-1.0) ** swaps
    return float(np.sum(np.log(absd))), phase


def det(a: np.ndarray) -> complex:
    log_mag, phase = log_abs_det(a)
    return phase * np.exp(log_mag)


def log_block_det(a, b, c, d, tol: float | None = None) -> tuple[float, complex]:
    """det [[a, b], [c, d]] = det a * det(d - c a^{-1} b), in (log-magnitude, phase) form."""
    tol = get_settings().tol_singular if tol is None else tol
    a, b, c, d = (as_matrix(x) for x in (a, b, c, d))
    if a.shape[0] != a.shape[1] or d.shape[0] != d.shape[1]:
        raise ValueError("block_det: diagonal blocks must be square")
    if b.shape != (a.shape[0], d.shape[0]) or c.shape != (d.shape[0], a.shape[0]):
        raise ValueError("block_det: off-diagonal blocks are not conformable")
    sv = smallest_singular_value(a)
    if sv < tol:
        raise SingularityError("block_det", sv)
    schur = d - c @ sla.solve(a, b)
    la, pa = log_abs_det(a, stage="block_det")
    ls, ps = log_abs_det(schur, stage="block_det")
    return la + ls, pa * ps


def block_det(a, b, c, d) -> complex:
    log_mag, phase = log_block_det(a, b, c, d)
    return phase * np.exp(log_mag)


# =============================================
# BLOCK UNITARY
# =============================================
@dataclass(frozen=True)
class BlockUnitary:
    """
    A unitary (n+m) x (n+m) matrix g = [[alpha, beta], [gamma, delta]]
    with alpha n x n and delta m x m.
    """

    g: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        g = as_matrix(self.g).copy()
        if self.n < 1 or self.m < 1:
            raise ValueError(f"block sizes must be positive, got n={self.n}, m={self.m}")
        if g.shape != (self.n + self.m, self.n + self.m):
            raise ValueError(f"g has shape {g.shape}, expected {(self.n + self.m,) * 2}")
        if not np.all(np.isfinite(g)):
            raise ValueError("g has non-finite entries")
        if not is_unitary(g):
            err = max_abs(g.conj().T @ g - np.eye(g.shape[0]))
            raise NotUnitaryError(f"||g*g - 1||_max = {err:.3e}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def alpha(self) -> np.ndarray:
        return self.g[: self.n, : self.n]

    @property
    def beta(self) -> np.ndarray:
        return self.g[: self.n, self.n :]

    @property
    def gamma(self) -> np.ndarray:
        return self.g[self.n :, : self.n]

    @property
    def delta(self) -> np.ndarray:
        return self.g[self.n :, self.n :]

    @classmethod
    def haar(cls, n: int, m: int, rng: np.random.Generator) -> "BlockUnitary":
        return cls(haar_unitary(n + m, rng), n, m)


def lower_embedding(n: int, u: np.ndarray) -> np.ndarray:
    """diag(1_n, u)."""
    u = as_matrix(u)
    m = u.shape[0]
    out = np.zeros((n + m, n + m), dtype=np.complex128)
    out[:n, :n] = np.eye(n)
    out[n:, n:] = u
    return out


def conjugate_lower(bu: BlockUnitary, u: np.ndarray) -> BlockUnitary:
    """diag(1, u) g diag(1, u)^{-1}; leaves the characteristic function unchanged."""
    w = lower_embedding(bu.n, u)
    return BlockUnitary(w @ bu.g @ w.conj().T, bu.n, bu.m)
