import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonmet.asymmetry import (bohr_frequencies, check_sa_modes, check_wa_modes, g_twirl, mode_decompose,
                               mode_project, multipartite_wa_check, split_frequencies, split_twirl, verdict)
from anonmet.classify import is_sa, is_wa
from anonmet.qmat import DensityMatrix, HamiltonianPair, embed, unitary_of
from anonmet.states import (bell_psi_plus, maximally_correlated, maximally_correlated_multipartite,
                            random_product_state, random_state, random_unitary, werner)

import oracles

P1 = np.diag([0.0, 1.0])
P0 = np.diag([1.0, 0.0])
seeds = st.integers(0, 2**31 - 1)


def integer_generator(d, rng):
    u = random_unitary(d, seed=rng)
    return u @ np.diag(rng.integers(0, 3, d).astype(float)) @ u.conj().T


def test_verdict_band():
    assert verdict(1e-12, 1.0) == (True, True)
    assert verdict(1e-3, 1.0) == (False, True)
    assert verdict(1e-7, 1.0) == (False, False)
    assert verdict(0.0, 1e-12) == (False, True)
    assert verdict(0.0, 1e-7) == (False, False)


def test_bohr_frequencies():
    assert bohr_frequencies(np.diag([0, 1, 3.0])) == pytest.approx([-3, -2, -1, 0, 1, 2, 3])


def test_bell_modes():
    dec = mode_decompose(bell_psi_plus(), P1, "A")
    assert sorted(dec.modes) == pytest.approx([-1, 0, 1])
    expected = np.zeros((4, 4))
    expected[3, 0] = 0.5
    np.testing.assert_allclose(dec.modes[-1.0], expected, atol=1e-15)
    np.testing.assert_allclose(dec.modes[1.0], expected.T, atol=1e-15)
    assert dec.completeness_residual(bell_psi_plus()) <= 1e-15


def test_diagonal_state_has_only_zero_mode():
    rho = DensityMatrix(np.diag([0.1, 0.2, 0.3, 0.4]), (2, 2))
    assert mode_decompose(rho, P1, "A").nonzero() == [0.0]


@settings(max_examples=20, deadline=None)
@given(seed=seeds, site=st.integers(0, 1))
def test_mode_project_matches_time_average(seed, site):
    rng = np.random.default_rng(seed)
    dims = (2, 3)
    rho = random_state(dims, seed=rng)
    h = integer_generator(dims[site], rng)
    for omega in bohr_frequencies(h):
        got = mode_project(rho, h, site, omega)
        want = oracles.mode_by_averaging(rho.matrix, h, site, dims, omega)
        np.testing.assert_allclose(got, want, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, theta=st.floats(0, 2 * np.pi))
def test_mode_eigen_relation(seed, theta):
    rng = np.random.default_rng(seed)
    rho = random_state((2, 2), seed=rng)
    h = integer_generator(2, rng) + rng.normal() * np.eye(2)
    u = embed(unitary_of(h, theta), 0, (2, 2))
    dec = mode_decompose(rho, h, "A")
    for omega, m in dec.modes.items():
        np.testing.assert_allclose(u @ m @ u.conj().T, np.exp(1j * omega * theta) * m, atol=1e-10)
    np.testing.assert_allclose(dec.total(), rho.matrix, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, theta=st.floats(0, 2 * np.pi), shift=st.sampled_from([0.0, 1.0, -2.0]))
def test_split_twirl_eigen_relation_and_completeness(seed, theta, shift):
    rng = np.random.default_rng(seed)
    rho = random_state((2, 3), seed=rng)
    pair = HamiltonianPair(integer_generator(2, rng), integer_generator(3, rng))
    u = embed(unitary_of(pair.h_a + shift * np.eye(2), theta), 0, (2, 3))
    v = embed(unitary_of(pair.g_b, theta), 1, (2, 3))
    total = np.zeros((6, 6), dtype=complex)
    for omega in split_frequencies(pair, shift):
        x = split_twirl(rho, pair, omega, shift)
        np.testing.assert_allclose(u @ x @ v.conj().T, np.exp(1j * omega * theta) * x, atol=1e-10)
        total += x
    np.testing.assert_allclose(total, rho.matrix, atol=1e-12)


def test_g_twirl_fixed_points():
    rho = werner(0.5)
    pair = HamiltonianPair(P1, P0)
    np.testing.assert_allclose(g_twirl(rho, pair), rho.matrix, atol=1e-15)
    bad = HamiltonianPair(P1, P1)
    assert np.abs(g_twirl(rho, bad) - rho.matrix).max() > 0.1


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_g_twirl_is_idempotent_projection(seed):
    rng = np.random.default_rng(seed)
    rho = random_state((2, 2), seed=rng)
    pair = HamiltonianPair(integer_generator(2, rng), integer_generator(2, rng))
    once = g_twirl(rho, pair)
    np.testing.assert_allclose(g_twirl(DensityMatrix(once, (2, 2)), pair), once, atol=1e-12)
    k = embed(pair.h_a, 0, (2, 2)) - embed(pair.g_b, 1, (2, 2))
    np.testing.assert_allclose(k @ once - once @ k, 0, atol=1e-10)


def test_bell_mode_checks():
    pair = HamiltonianPair(P1, P1)
    wa = check_wa_modes(bell_psi_plus(), pair)
    sa = check_sa_modes(bell_psi_plus(), pair)
    assert wa.holds and wa.residual <= 1e-15 and wa.has_nonzero_mode
    assert sa.holds and sa.residual <= 1e-15


def test_werner_modes_wa_not_sa():
    pair = HamiltonianPair(P1, P0)
    assert check_wa_modes(werner(0.5), pair).holds
    assert not check_sa_modes(werner(0.5), pair).holds


def test_sa_phase_shift_found():
    # G = H + 2: anonymous only up to the global phase exp(-2 i theta)
    pair = HamiltonianPair(P1, P1 + 2 * np.eye(2))
    assert check_sa_modes(bell_psi_plus(), pair).holds
    assert not check_sa_modes(bell_psi_plus(), pair, allow_phase=False).holds
    assert check_sa_modes(bell_psi_plus(), pair).shift == pytest.approx(2.0)


def test_mode_checks_against_theta_scan_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        c = random_state((2,), seed=rng).matrix
        u, v = random_unitary(2, seed=rng), random_unitary(2, seed=rng)
        w = np.kron(u, v)
        rho = DensityMatrix(w @ maximally_correlated(c).matrix @ w.conj().T, (2, 2))
        pair = HamiltonianPair(u @ P1 @ u.conj().T, v @ P1 @ v.conj().T)
        assert check_sa_modes(rho, pair).holds
        assert oracles.sa_scan(rho.matrix, pair.h_a, pair.g_b) <= 1e-10
        other = HamiltonianPair(pair.h_a, P1)
        scan = oracles.sa_scan(rho.matrix, other.h_a, other.g_b)
        assert check_sa_modes(rho, other).holds == (scan <= 1e-9)


def test_pair_dimension_mismatch():
    with pytest.raises(ValueError):
        check_wa_modes(bell_psi_plus(), HamiltonianPair(np.eye(3), P1))


def test_multipartite_mode_check():
    ghz = maximally_correlated_multipartite(np.full((2, 2), 0.5), 3)
    assert multipartite_wa_check(ghz, [P1, P1, P1]).holds
    prod = random_product_state((2, 2, 2), seed=2)
    assert not multipartite_wa_check(prod, [P1, P1, P1]).holds
    with pytest.raises(ValueError):
        multipartite_wa_check(ghz, [P1, P1])


@pytest.mark.parametrize("seed", range(5))
def test_commutator_and_mode_verdicts_agree(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        rho = random_state((2, 2), seed=rng)
        pair = HamiltonianPair(integer_generator(2, rng), integer_generator(2, rng))
        assert check_wa_modes(rho, pair).holds == is_wa(rho, pair).holds
        assert check_sa_modes(rho, pair).holds == is_sa(rho, pair).holds
