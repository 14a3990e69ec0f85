"""
Characteristic Function Service
-------------------------------
Realization-backed evaluation of the Livshits characteristic function

    chi(lam) = alpha + lam * beta (1 - lam delta)^{-1} gamma

of a block unitary matrix, its derivative, the determinant ratio, the
graph (elimination) form and the Cayley/Moebius chain identity, plus the
analytic properties of rational inner functions as checkable predicates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from haar_radial.config import get_settings
from haar_radial.errors import PoleError, SingularityError
from haar_radial.services.matrix_core import (
    BlockUnitary,
    as_matrix,
    cayley,
    hermitian_eig,
    log_abs_det,
    smallest_singular_value,
)

logger = logging.getLogger(__name__)


def _pole_guard(one_minus: np.ndarray, lam: complex, tol: float) -> None:
    if smallest_singular_value(one_minus) < tol:
        raise PoleError(lam)


def transfer_value(mat: np.ndarray, n: int, lam: complex, tol: float | None = None) -> np.ndarray:
    """
    Characteristic function of an arbitrary square block matrix ``mat`` split
    at ``n``. The unitary case goes through CharFunction; the Cayley chain
    needs it for anti-Hermitian matrices too.
    """
    tol = get_settings().tol_singular if tol is None else tol
    mat = as_matrix(mat)
    a, b = mat[:n, :n], mat[:n, n:]
    c, d = mat[n:, :n], mat[n:, n:]
    if lam == 0:
        return a.copy()
    one_minus = np.eye(d.shape[0]) - lam * d
    _pole_guard(one_minus, lam, tol)
    return a + lam * (b @ sla.solve(one_minus, c))


@dataclass(frozen=True)
class CharFunction:
    realization: BlockUnitary

    @property
    def n(self) -> int:
        return self.realization.n

    @property
    def m(self) -> int:
        return self.realization.m

    def __call__(self, lam: complex) -> np.ndarray:
        return char_eval(self, lam)

    def _one_minus(self, lam: complex) -> np.ndarray:
        one_minus = np.eye(self.m) - lam * self.realization.delta
        _pole_guard(one_minus, lam, get_settings().tol_singular)
        return one_minus


def char_eval(f: CharFunction, lam: complex) -> np.ndarray:
    return transfer_value(f.realization.g, f.n, complex(lam))


def char_deriv(f: CharFunction, lam: complex) -> np.ndarray:
    """chi'(lam) = beta R gamma + lam beta R delta R gamma with R = (1 - lam delta)^{-1}."""
    lam = complex(lam)
    g = f.realization
    one_minus = f._one_minus(lam)
    r_gamma = sla.solve(one_minus, g.gamma)
    r_delta_r_gamma = sla.solve(one_minus, g.delta @ r_gamma)
    return g.beta @ r_gamma + lam * (g.beta @ r_delta_r_gamma)


def det_ratio_parts(f: CharFunction, lam: complex) -> tuple[complex, complex]:
    """Numerator det[[alpha, -lam beta], [gamma, 1 - lam delta]] and denominator det(1 - lam delta)."""
    lam = complex(lam)
    g = f.realization
    one_minus = np.eye(f.m) - lam * g.delta
    pencil = np.block([[g.alpha, -lam * g.beta], [g.gamma, one_minus]])
    num_log, num_phase = _safe_log_det(pencil)
    den_log, den_phase = _safe_log_det(one_minus)
    return num_phase * np.exp(num_log), den_phase * np.exp(den_log)


def _safe_log_det(a: np.ndarray) -> tuple[float, complex]:
    try:
        return log_abs_det(a)
    except SingularityError:
        return -np.inf, 1.0 + 0.0j


def char_det_ratio(f: CharFunction, lam: complex) -> complex:
    lam = complex(lam)
    f._one_minus(lam)
    num, den = det_ratio_parts(f, lam)
    return num / den


def graph_eval(f: CharFunction, lam: complex, p: np.ndarray) -> np.ndarray:
    """
    Solve the linear relation (q, x) = g (p, lam x) for q by eliminating x:
    x = gamma p + lam delta x, q = alpha p + lam beta x.
    """
    lam = complex(lam)
    g = f.realization
    p = np.asarray(p, dtype=np.complex128).reshape(-1)
    if p.shape != (f.n,):
        raise ValueError(f"p must have length {f.n}, got {p.shape}")
    x = sla.solve(f._one_minus(lam), g.gamma @ p)
    return g.alpha @ p + lam * (g.beta @ x)


def lemma2_chain(g: BlockUnitary, t: complex) -> np.ndarray:
    """
    cayley(g) = H, phi = characteristic function of H, psi = cayley(phi);
    returns psi((t + 1) / (t - 1)), which equals chi_g(t).
    """
    t = complex(t)
    if t == 1:
        raise SingularityError("moebius(t)", 0.0)
    h = cayley(g.g, stage="cayley(g)")
    s = (t + 1.0) / (t - 1.0)
    try:
        phi = transfer_value(h, g.n, s)
    except PoleError as e:
        raise SingularityError("phi(s)") from e
    return cayley(phi, stage="cayley(phi)")


# =============================================
# POLES AND RESIDUES
# =============================================
def candidate_poles(f: CharFunction, tol: float = 1e-14) -> list[complex]:
    """Reciprocals of the nonzero eigenvalues of delta: the roots of det(1 - lam delta)."""
    eig = sla.eigvals(f.realization.delta)
    return [complex(1.0 / e) for e in eig if abs(e) > tol]


def cayley_poles_residues(g: BlockUnitary) -> list[tuple[complex, np.ndarray]]:
    """
    Poles s_k = 1/(i mu_k) of the characteristic function phi of H = cayley(g)
    and their rank-one residues -b_k b_k^* / mu_k^2, with mu_k the eigenvalues
    of D and b_k the columns of B V, where H = i [[A, B], [B*, D]].
    A zero mu_k puts the pole at infinity; such terms are skipped.
    """
    h = cayley(g.g, stage="cayley(g)")
    k = -1j * h
    b = k[: g.n, g.n :]
    mu, v = hermitian_eig(k[g.n :, g.n :])
    bv = b @ v
    out = []
    for mu_k, b_k in zip(mu, bv.T):
        if abs(mu_k) < get_settings().tol_degenerate:
            logger.debug(f"skipping pole at infinity (mu={mu_k:.3e})")
            continue
        out.append((complex(1.0 / (1j * mu_k)), -np.outer(b_k, b_k.conj()) / mu_k**2))
    return out


# =============================================
# ANALYTIC PROPERTIES
# =============================================
def is_unitary_at(f: CharFunction, lam: complex, tol: float = 1e-9) -> bool:
    chi = char_eval(f, lam)
    return float(np.max(np.abs(chi.conj().T @ chi - np.eye(f.n)))) <= tol


def is_contractive_at(f: CharFunction, lam: complex, tol: float = 1e-9) -> bool:
    """||chi(lam)|| <= 1 inside the disk."""
    return float(np.linalg.norm(char_eval(f, lam), 2)) <= 1.0 + tol


def is_expansive_inverse_at(f: CharFunction, lam: complex, tol: float = 1e-9) -> bool:
    """Outside the disk the reflection principle gives ||chi(lam)^{-1}|| <= 1."""
    chi = char_eval(f, lam)
    smallest = float(sla.svdvals(chi)[-1])
    return smallest > 0 and 1.0 / smallest <= 1.0 + tol
