from fractions import Fraction
from math import factorial, log, pi

import numpy as np
import pytest
import scipy.linalg as sla
from scipy import integrate

from haar_radial.errors import DegenerateSampleError, DomainError
from haar_radial.services.density import (
    ReferenceMeasure,
    abm_log_density,
    chart_log_density,
    chart_log_density_batch,
    hua_k2_diagonal_density,
    hua_k2_diagonal_moments,
    hua_log_density,
    log_chart_factor,
    log_hua_const,
    log_theta_const,
    log_weyl_const,
    main_log_density,
    main_log_density_batch,
    theta_const,
    weyl_log_density,
)
from haar_radial.services.spectral import SpectralData, extract_direct


def _superfactorial(k: int) -> int:
    out = 1
    for j in range(1, k + 1):
        out *= factorial(j)
    return out


def _theta_rational(n: int, m: int) -> Fraction:
    return Fraction(_superfactorial(m + n - 1), 2**m * _superfactorial(n - 1) * _superfactorial(m))


WORKED = SpectralData(t=[1j], C=[[1.0]], U=[[1.0]])


# =============================================
# CONSTANTS
# =============================================
@pytest.mark.parametrize(
    "n, m, expected",
    [(1, 1, 1 / (2 * pi)), (2, 1, 1 / pi**2), (1, 2, 1 / (4 * pi**2))],
)
def test_theta_examples(n, m, expected):
    assert theta_const(n, m) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("m", range(1, 5))
def test_theta_against_exact_rational(n, m):
    exact = log(_theta_rational(n, m)) - m * n * log(pi)
    assert log_theta_const(n, m) == pytest.approx(exact, abs=1e-12)


def test_theta_rejects_zero_sizes():
    with pytest.raises(ValueError):
        log_theta_const(0, 1)


@pytest.mark.parametrize("k", range(1, 5))
def test_hua_const_against_exact_rational(k):
    rational = Fraction(2 ** (k * k - k) * _superfactorial(k - 1))
    assert log_hua_const(k) == pytest.approx(log(rational) - 0.5 * k * (k + 1) * log(pi), abs=1e-12)


def test_weyl_const_m2():
    assert np.exp(log_weyl_const(2)) == pytest.approx(pi / 2)


# =============================================
# MAIN DENSITY
# =============================================
def test_worked_example():
    value = main_log_density(WORKED)
    assert value.reference is ReferenceMeasure.MAIN_SPECTRAL
    assert value.log_value == pytest.approx(log(2 / (25 * pi)), abs=1e-12)


def test_minus_one_is_outside_domain():
    with pytest.raises(DomainError):
        main_log_density(SpectralData(t=[-1.0], C=[[1.0]], U=[[1.0]]))


def test_singular_one_plus_u_is_outside_domain():
    with pytest.raises(DomainError):
        main_log_density(SpectralData(t=[1j], C=[[1.0]], U=[[-1.0]]))


def test_symmetric_under_simultaneous_permutation(rng):
    t = np.exp(1j * np.array([2.5, 1.0]))
    c = np.array([[0.7, 1.3]])
    u = np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.ones((1, 1))
    a = main_log_density(SpectralData(t=t, C=c, U=u)).log_value
    b = main_log_density(SpectralData(t=t[::-1], C=c[:, ::-1], U=u)).log_value
    assert a == pytest.approx(b, abs=1e-12)


def test_readings_differ_only_when_m_exceeds_n():
    sd = SpectralData(t=np.exp(1j * np.array([2.5, 1.0])), C=[[0.7, 1.3]], U=[[1j]])
    assert main_log_density(sd, reading="m").log_value != pytest.approx(main_log_density(sd, reading="n").log_value)
    square = SpectralData(t=[1j], C=[[1.0]], U=[[1.0]])
    assert main_log_density(square, reading="m").log_value == main_log_density(square, reading="n").log_value


def test_drop_det_u_mutation():
    # |det(1 + U)|^{2m} = 4 at the worked point
    full = main_log_density(WORKED).log_value
    mutated = main_log_density(WORKED, mutation="drop-detU").log_value
    assert full - mutated == pytest.approx(2 * log(2.0), abs=1e-12)


def test_batch_matches_scalar(haar_block):
    points = []
    while len(points) < 8:
        try:
            points.append(extract_direct(haar_block(2, 3), strict_u=True))
        except DegenerateSampleError:
            continue
    t = np.stack([sd.t for sd in points])
    c = np.stack([sd.C for sd in points])
    u = np.stack([sd.U for sd in points])
    batch = main_log_density_batch(t, c, u)
    scalar = [main_log_density(sd).log_value for sd in points]
    assert np.allclose(batch, scalar, atol=1e-10)


def test_batch_marks_domain_errors():
    t = np.array([[1j], [-1.0 + 0j]])
    c = np.ones((2, 1, 1), dtype=complex)
    u = np.ones((2, 1, 1), dtype=complex)
    out = main_log_density_batch(t, c, u)
    assert np.isfinite(out[0]) and out[1] == -np.inf


# =============================================
# ORDERED CHART
# =============================================
def test_chart_factor_values():
    assert log_chart_factor(np.array([1.0, 2.0])) == pytest.approx(log(2 * 2.0 * 4.0), abs=1e-12)
    assert log_chart_factor(np.array([0.5])) == pytest.approx(0.0, abs=1e-12)
    assert log_chart_factor(np.array([1.0, 0.0])) == -np.inf


def test_chart_density_adds_chart_factor():
    sd = SpectralData(t=np.exp(1j * np.array([2.5, 1.0])), C=[[0.7, 1.3]], U=[[1j]])
    expected = main_log_density(sd).log_value + log(2 * 1.4 * 2.6)
    assert chart_log_density(sd) == pytest.approx(expected, abs=1e-12)


def test_chart_density_rejects_non_positive_first_row():
    with pytest.raises(DomainError):
        chart_log_density(SpectralData(t=[1j], C=[[-1.0]], U=[[1.0]]))


def test_chart_batch_matches_scalar():
    sd = SpectralData(t=np.exp(1j * np.array([2.5, 1.0])), C=[[0.7, 1.3]], U=[[1j]])
    batch = chart_log_density_batch(sd.t[np.newaxis], sd.C[np.newaxis], sd.U[np.newaxis])
    assert batch[0] == pytest.approx(chart_log_density(sd), abs=1e-10)


# =============================================
# FINITENESS AND CONTINUITY ALONG SEGMENTS
# =============================================
SEGMENT = np.linspace(0.0, 1.0, 2001)
MAX_STEP = 0.25


def _hermitian(rng, k, norm):
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    h = z + z.conj().T
    return norm * h / np.linalg.norm(h, 2)


def _assert_continuous(values):
    values = np.asarray(values)
    assert np.all(np.isfinite(values))
    assert float(np.max(np.abs(np.diff(values)))) <= MAX_STEP


@pytest.mark.parametrize("n, m", [(1, 1), (2, 2), (1, 3)])
def test_main_density_continuous_on_segment(rng, n, m):
    ends = []
    for _ in range(2):
        args = np.sort(rng.uniform(0.2, 2.5, m))[::-1]
        c = rng.uniform(0.3, 1.0, (n, m)) + 1j * rng.uniform(-0.5, 0.5, (n, m))
        c[0] = c[0].real
        ends.append((args, c, _hermitian(rng, n, 1.0)))
    values = []
    for s in SEGMENT:
        args, c, h = ((1 - s) * x + s * y for x, y in zip(*ends))
        sd = SpectralData(t=np.exp(1j * args), C=c, U=sla.expm(1j * h))
        values.append(main_log_density(sd).log_value)
    _assert_continuous(values)


def test_hua_density_continuous_on_segment(rng):
    k0, k1 = _hermitian(rng, 3, 2.0), _hermitian(rng, 3, 2.0)
    _assert_continuous([hua_log_density(1j * ((1 - s) * k0 + s * k1), 3).log_value for s in SEGMENT])


def test_weyl_density_continuous_on_segment():
    mu0, mu1 = np.array([2.0, 0.5, -1.0]), np.array([0.8, 0.1, -3.0])
    _assert_continuous([weyl_log_density((1 - s) * mu0 + s * mu1).log_value for s in SEGMENT])


def test_abm_density_continuous_on_segment(rng):
    a0, a1 = _hermitian(rng, 2, 1.0), _hermitian(rng, 2, 1.0)
    b0 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    mu0, mu1 = np.array([1.0, -0.5]), np.array([0.3, -2.0])
    values = [
        abm_log_density((1 - s) * a0 + s * a1, (1 - s) * b0 + s * b1, (1 - s) * mu0 + s * mu1).log_value
        for s in SEGMENT
    ]
    _assert_continuous(values)


# =============================================
# PROOF-STAGE DENSITIES
# =============================================
@pytest.mark.parametrize("x", [0.0, 0.5, -3.0])
def test_hua_k1_is_cauchy(x):
    value = hua_log_density(np.array([[1j * x]]), 1)
    assert value.reference is ReferenceMeasure.HUA_LEBESGUE
    assert np.exp(value.log_value) == pytest.approx(1 / (pi * (1 + x * x)))


def test_hua_rejects_hermitian_input():
    with pytest.raises(ValueError):
        hua_log_density(np.array([[1.0]]), 1)


def test_hua_k1_has_unit_mass():
    mass, _ = integrate.quad(lambda x: np.exp(hua_log_density(np.array([[1j * x]]), 1).log_value), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_hua_k2_on_diagonal():
    lam = np.array([0.4, -1.5])
    value = hua_log_density(1j * np.diag(lam), 2).log_value
    assert np.exp(value) == pytest.approx(4 / pi**3 * np.prod(1 + lam**2) ** -2.0, rel=1e-12)


def test_hua_k2_has_unit_mass():
    assert hua_k2_diagonal_moments()["mass"] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("a", [0.0, 0.3, -1.7, 12.0])
def test_hua_k2_diagonal_is_cauchy(a):
    assert hua_k2_diagonal_density(a) == pytest.approx(1 / (pi * (1 + a * a)), rel=1e-7)


def test_hua_k2_arctan_moments():
    moments = hua_k2_diagonal_moments()
    assert moments["arctan"] == pytest.approx(0.0, abs=1e-7)
    assert moments["arctan_sq"] == pytest.approx(pi**2 / 12, abs=1e-6)


def test_hua_k2_quadrature_is_stable_under_refinement():
    coarse, fine = hua_k2_diagonal_moments(epsrel=1e-6), hua_k2_diagonal_moments(epsrel=1e-11)
    for key in ("mass", "arctan_sq"):
        assert coarse[key] == pytest.approx(fine[key], abs=1e-5)


def _gue_eigen_density(x, y):
    if x == y:
        return 0.0
    mu = sorted((x, y), reverse=True)
    return np.exp(-(x * x + y * y) / 2 + weyl_log_density(mu).log_value) / (2 * pi**2)


def test_weyl_factor_normalizes_gue():
    # exp(-tr M^2 / 2) / (2 pi^2) is a probability density on the four real coordinates of M
    mass, _ = integrate.dblquad(_gue_eigen_density, -np.inf, np.inf, -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_weyl_m1_is_one():
    assert weyl_log_density([0.3]).log_value == 0.0


def test_weyl_m2():
    assert np.exp(weyl_log_density([1.0, 0.0]).log_value) == pytest.approx(pi / 2)


def test_weyl_needs_descending():
    with pytest.raises(DomainError):
        weyl_log_density([0.0, 1.0])


def test_abm_at_origin():
    value = abm_log_density(np.zeros((1, 1)), np.zeros((1, 1)), [0.0])
    assert value.reference is ReferenceMeasure.ABM_LEBESGUE
    assert value.log_value == pytest.approx(log(4 / pi**3), abs=1e-12)


def test_abm_decreases_with_dominant_diagonal():
    a = np.diag([0.2, -0.1])
    b = np.array([[0.3], [0.1j]])
    shifted = a + np.diag([1e3, 0.0])
    assert abm_log_density(shifted, b, [0.5]).log_value < abm_log_density(a, b, [0.5]).log_value
