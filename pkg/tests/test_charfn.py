import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haar_radial.errors import PoleError, SingularityError
from haar_radial.services.charfn import (
    CharFunction,
    candidate_poles,
    cayley_poles_residues,
    char_deriv,
    char_det_ratio,
    char_eval,
    det_ratio_parts,
    graph_eval,
    is_contractive_at,
    is_expansive_inverse_at,
    is_unitary_at,
    lemma2_chain,
    transfer_value,
)
from haar_radial.services.matrix_core import BlockUnitary, cayley, conjugate_lower, haar_unitary


def _circle_points(rng, k):
    return np.exp(2j * np.pi * rng.uniform(size=k))


# =============================================
# EVALUATION
# =============================================
def test_value_at_zero_is_alpha(haar_block):
    bu = haar_block(2, 3)
    assert np.allclose(char_eval(CharFunction(bu), 0.0), bu.alpha)


def test_block_diagonal_is_constant(rng):
    a, d = haar_unitary(2, rng), haar_unitary(2, rng)
    g = np.zeros((4, 4), dtype=complex)
    g[:2, :2], g[2:, 2:] = a, d
    f = CharFunction(BlockUnitary(g, 2, 2))
    for lam in (0.3, 0.5j, -0.9 + 0.1j):
        assert np.allclose(f(lam), a)


def test_swap_is_identity_function(swap_matrix):
    f = CharFunction(swap_matrix)
    for lam in (0.2, 0.7j, -0.4 - 0.3j, 3.0):
        assert np.isclose(char_eval(f, lam)[0, 0], lam)
        assert np.isclose(char_deriv(f, lam)[0, 0], 1.0)
        assert np.isclose(char_det_ratio(f, lam), lam)


def test_graph_eval_swap(swap_matrix):
    q = graph_eval(CharFunction(swap_matrix), 0.5, np.array([1.0]))
    assert np.allclose(q, [0.5])


def test_graph_eval_zero_input(haar_block):
    assert np.allclose(graph_eval(CharFunction(haar_block(2, 2)), 0.4j, np.zeros(2)), 0.0)


def test_graph_eval_matches_char_eval(haar_block, rng):
    f = CharFunction(haar_block(3, 2))
    p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lam = 0.6 * np.exp(1j * 0.4)
    assert np.max(np.abs(graph_eval(f, lam, p) - char_eval(f, lam) @ p)) <= 1e-10


def test_pole_raises():
    g = np.eye(2)
    with pytest.raises(PoleError):
        transfer_value(g, 1, 1.0)


# =============================================
# DERIVATIVE AND DETERMINANT RATIO
# =============================================
def test_derivative_matches_finite_differences(haar_block):
    f = CharFunction(haar_block(2, 2))
    lam, h = 0.3 + 0.1j, 1e-6
    fd = (char_eval(f, lam + h) - char_eval(f, lam - h)) / (2 * h)
    assert np.max(np.abs(fd - char_deriv(f, lam))) <= 1e-6


def test_derivative_zero_without_coupling(rng):
    g = np.zeros((3, 3), dtype=complex)
    g[:2, :2], g[2:, 2:] = haar_unitary(2, rng), haar_unitary(1, rng)
    assert np.allclose(char_deriv(CharFunction(BlockUnitary(g, 2, 1)), 0.5), 0.0)


def test_det_ratio_at_zero(haar_block):
    bu = haar_block(2, 2)
    assert np.isclose(char_det_ratio(CharFunction(bu), 0.0), np.linalg.det(bu.alpha))


def test_det_ratio_matches_direct_determinant(haar_block, rng):
    f = CharFunction(haar_block(3, 2))
    lams = np.sqrt(rng.uniform(0, 0.8, 20)) * _circle_points(rng, 20)
    for lam in lams:
        direct = np.linalg.det(char_eval(f, lam))
        assert abs(char_det_ratio(f, lam) - direct) / abs(direct) <= 1e-9


def test_det_ratio_parts_are_polynomials_of_degree_m(haar_block):
    f = CharFunction(haar_block(1, 2))
    roots = np.exp(2j * np.pi * np.arange(6) / 6)
    for part in (0, 1):
        coeffs = np.fft.fft([det_ratio_parts(f, z)[part] for z in roots]) / 6
        assert np.max(np.abs(coeffs[3:])) <= 1e-12


# =============================================
# CAYLEY CHAIN
# =============================================
def test_chain_at_i(haar_block):
    bu = haar_block(1, 1)
    assert np.max(np.abs(lemma2_chain(bu, 1j) - char_eval(CharFunction(bu), 1j))) <= 1e-9


def test_chain_on_circle(haar_block, rng):
    bu = haar_block(2, 3)
    f = CharFunction(bu)
    for t in _circle_points(rng, 10):
        assert np.max(np.abs(lemma2_chain(bu, t) - char_eval(f, t))) <= 1e-9


def test_chain_needs_regular_cayley(swap_matrix):
    with pytest.raises(SingularityError) as err:
        lemma2_chain(swap_matrix, 1j)
    assert err.value.stage == "cayley(g)"


def test_chain_rejects_t_equal_one(haar_block):
    with pytest.raises(SingularityError):
        lemma2_chain(haar_block(1, 1), 1.0)


# =============================================
# INNER-FUNCTION PROPERTIES
# =============================================
@given(n=st.integers(1, 3), m=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_inner_function_properties(n, m, seed):
    rng = np.random.default_rng(seed)
    f = CharFunction(BlockUnitary.haar(n, m, rng))
    angle = np.exp(2j * np.pi * rng.uniform())
    assert is_unitary_at(f, angle)
    assert is_contractive_at(f, 0.7 * angle)
    assert is_expansive_inverse_at(f, 1.5 * angle)


def test_conjugating_lower_block_keeps_chi(haar_block, rng):
    bu = haar_block(2, 2)
    moved = conjugate_lower(bu, haar_unitary(2, rng))
    for lam in (0.4, 0.3j, -0.5 + 0.2j):
        assert np.allclose(char_eval(CharFunction(bu), lam), char_eval(CharFunction(moved), lam))


def test_candidate_poles_outside_disk(haar_block):
    poles = candidate_poles(CharFunction(haar_block(2, 3)))
    assert len(poles) == 3
    assert all(abs(p) > 1 for p in poles)


def test_cayley_residues_match_limit(haar_block):
    bu = haar_block(2, 2)
    h = cayley(bu.g)
    for s_k, residue in cayley_poles_residues(bu):
        eps = 1e-7 * abs(s_k)
        limit = eps * transfer_value(h, bu.n, s_k + eps)
        assert np.max(np.abs(limit - residue)) <= 1e-4 * max(1.0, np.max(np.abs(residue)))
