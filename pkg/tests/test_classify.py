import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonmet.classify import (classify, find_sa_pair, find_wa_pair, integer_spectra, is_classical,
                              is_entangled_ppt, is_sa, is_sa_multipartite, is_wa, is_wa_multipartite,
                              schmidt_rank)
from anonmet.qmat import DensityMatrix, HamiltonianPair
from anonmet.states import (appendix_d_state, bell_psi_plus, catalog, cc_example, classical_states,
                            discord_example, maximally_correlated, maximally_correlated_multipartite,
                            random_product_state, random_pure_state, random_separable_state, random_state,
                            random_unitary, sa_degenerate, werner)

import oracles

P1 = np.diag([0.0, 1.0])
P0 = np.diag([1.0, 0.0])


def test_is_wa_bell_and_werner():
    assert is_wa(bell_psi_plus(), HamiltonianPair(P1, P1)).holds
    v = is_wa(werner(0.2), HamiltonianPair(P1, P0))
    assert v.holds and v.residual <= 1e-15 and v.encoding_residual > 0.1


def test_is_wa_residual_definitions():
    rho = random_state((2, 2), seed=3)
    pair = HamiltonianPair(P1, P0)
    k = np.kron(P1, np.eye(2)) - np.kron(np.eye(2), P0)
    ha = np.kron(P1, np.eye(2))
    v = is_wa(rho, pair)
    m = rho.matrix
    assert v.residual == pytest.approx(np.abs(k @ m - m @ k).max(), abs=1e-15)
    assert v.encoding_residual == pytest.approx(np.abs(ha @ m - m @ ha).max(), abs=1e-15)


def test_is_wa_dimension_mismatch():
    with pytest.raises(ValueError):
        is_wa(bell_psi_plus(), HamiltonianPair(np.eye(3), P1))


@pytest.mark.parametrize("seed", range(5))
def test_cq_states_never_wa(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(2, seed=rng)
    cq = classical_states("CQ", [0.3, 0.7], basis_a=u,
                          conditional=[random_state((2,), seed=rng).matrix for _ in range(2)])
    for _ in range(10):
        h = random_unitary(2, seed=rng)
        g = random_unitary(2, seed=rng)
        pair = HamiltonianPair(h @ P1 @ h.conj().T, g @ P1 @ g.conj().T)
        assert not is_wa(cq, pair).holds
    assert not find_wa_pair(cq).found


def test_is_sa_bell_and_mixture():
    assert is_sa(bell_psi_plus(), HamiltonianPair(P1, P1)).holds
    c = 0.6 * np.full((2, 2), 0.5) + 0.4 * np.diag([0.3, 0.7])
    rho = maximally_correlated(c)
    assert is_sa(rho, HamiltonianPair(P1, P1)).holds
    assert oracles.sa_scan(rho.matrix, P1, P1) <= 1e-12


@pytest.mark.parametrize("a", [0.2, 0.5, 0.9])
def test_werner_never_sa(a):
    rho = werner(a)
    assert not is_sa(rho, HamiltonianPair(P1, P0)).holds
    assert not find_sa_pair(rho).found
    rep = classify(rho)
    assert rep.sa.status == "witnessed-no"


def test_sa_algebraic_matches_theta_scan():
    """The derived algebraic SA condition against a direct theta-grid evaluation."""
    rng = np.random.default_rng(2024)
    disagreements = 0
    for k in range(500):
        kind = k % 3
        u, v = random_unitary(2, seed=rng), random_unitary(2, seed=rng)
        if kind == 0:
            rho = random_state((2, 2), seed=rng)
        else:
            c = random_state((2,), seed=rng).matrix
            if kind == 2:
                c = np.diag(np.diag(c)) * 0.5 + c * 0.5
            w = np.kron(u, v)
            rho = DensityMatrix(w @ maximally_correlated(c).matrix @ w.conj().T, (2, 2))
        h = u @ np.diag(rng.integers(0, 3, 2).astype(float)) @ u.conj().T
        g = v @ np.diag(rng.integers(0, 3, 2).astype(float)) @ v.conj().T
        pair = HamiltonianPair(h, g)
        verdict = is_sa(rho, pair)
        scan = oracles.sa_scan(rho.matrix, h, g)
        enc = oracles.encoding_scan(rho.matrix, h)
        disagreements += verdict.holds != (scan <= 1e-9 and enc > 1e-6)
    assert disagreements == 0


def test_integer_spectra_order_and_shift():
    specs = list(integer_spectra(2, 2))
    assert specs == [(0, 1), (0, 2), (1, 0), (2, 0)]
    assert all(min(s) == 0 and len(set(s)) > 1 for s in integer_spectra(3, 3))


def test_find_wa_pair_appendix_d_absent():
    res = find_wa_pair(appendix_d_state())
    assert not res.found
    assert res.status == "witnessed-no"


def test_find_wa_pair_werner():
    res = find_wa_pair(werner(0.3))
    assert res.found
    assert is_wa(werner(0.3), res.pair).holds


def test_find_wa_pair_discord_example_absent():
    assert not find_wa_pair(discord_example()).found


def test_find_sa_pair_bell():
    res = find_sa_pair(bell_psi_plus())
    assert res.found
    assert is_sa(bell_psi_plus(), res.pair).holds


def test_find_sa_pair_rediscovers_degenerate_witness():
    c = random_state((5,), seed=9).matrix
    rho = sa_degenerate(c, [2, 1])
    res = find_sa_pair(rho, n_random=0)
    assert res.found
    assert is_sa(rho, res.pair).holds


def test_search_result_serialises():
    d = find_wa_pair(werner(0.2)).to_dict()
    assert d["found"] and d["spectra"] == {"h_a": [0, 1], "g_b": [1, 0]}
    assert len(d["witness"]["h_a"]) == 2


def test_ppt():
    assert is_entangled_ppt(werner(0.5)).npt
    r = is_entangled_ppt(werner(0.2))
    assert not r.npt and r.conclusive
    assert is_entangled_ppt(appendix_d_state()).npt
    big = random_separable_state((3, 3), seed=1)
    assert not is_entangled_ppt(big).conclusive


def test_is_classical_examples():
    c = is_classical(cc_example())
    assert c.cc and c.cq and c.qc and c.conclusive
    d = is_classical(discord_example())
    assert not d.any and d.conclusive
    b = is_classical(bell_psi_plus())
    assert not b.any and b.conclusive


def test_is_classical_rotated_cq():
    u = random_unitary(3, seed=4)
    cq = classical_states("CQ", [0.2, 0.3, 0.5], basis_a=u,
                          conditional=[random_state((2,), seed=k).matrix for k in range(3)])
    r = is_classical(cq)
    assert r.cq and not r.qc


def test_is_classical_degenerate_marginal_cq():
    # marginal on A is maximally mixed, but the state is CQ in the computational basis
    plus = np.full((2, 2), 0.5)
    cq = classical_states("CQ", [0.5, 0.5], conditional=[plus, P0])
    assert is_classical(cq).cq


def test_schmidt_rank():
    assert schmidt_rank(bell_psi_plus()) == 2
    assert schmidt_rank(random_product_state((3, 3), seed=1, pure=True)) == 1
    with pytest.raises(ValueError):
        schmidt_rank(werner(0.5))


@pytest.mark.parametrize("name,params,ad,ae,ent", [
    ("bell-psi-plus", {}, True, True, True),
    ("werner", {"a": 0.2}, True, False, False),
    ("werner", {"a": 0.8}, True, False, True),
    ("appendix-d", {}, False, False, True),
    ("discord-example", {}, False, False, False),
    ("cc", {}, False, False, False),
])
def test_classify_catalog(name, params, ad, ae, ent):
    rep = classify(catalog(name, **params))
    assert (rep.aligned_discord, rep.aligned_entanglement, rep.entangled) == (ad, ae, ent)


def test_classify_werner_notes():
    rep = classify(catalog("werner", a=0.8))
    assert any("steerable" in n for n in rep.notes)
    assert any("Bell nonlocal" in n for n in rep.notes)
    d = rep.to_dict()
    assert d["schema"] == "anonmet.classification/1"


def test_hierarchy_random_two_qubit():
    rng = np.random.default_rng(7)
    for k in range(200):
        rank = 1 + k % 4
        rho = random_state((2, 2), rank=rank, seed=rng)
        rep = classify(rho)
        if rep.aligned_entanglement:
            assert rep.aligned_discord and rep.entangled
        if rep.classical.any:
            assert not rep.aligned_discord


def test_separable_states_never_sa():
    rng = np.random.default_rng(5)
    for _ in range(100):
        assert not find_sa_pair(random_separable_state((2, 2), seed=rng)).found


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dims=st.sampled_from([(2, 2), (3, 3)]))
def test_pure_state_theorem(seed, dims):
    rho = random_pure_state(dims, seed=seed)
    rep = classify(rho)
    assert rep.aligned_discord == rep.aligned_entanglement == (schmidt_rank(rho) >= 2)


def test_pure_product_state_not_ad():
    rho = random_product_state((2, 3), seed=3, pure=True)
    rep = classify(rho)
    assert not rep.aligned_discord and not rep.aligned_entanglement


def test_multipartite_checks():
    ghz = maximally_correlated_multipartite(np.full((2, 2), 0.5), 3)
    assert is_wa_multipartite(ghz, [P1] * 3).holds
    assert is_sa_multipartite(ghz, [P1] * 3).holds
    prod = random_product_state((2, 2, 2), seed=1)
    assert not is_wa_multipartite(prod, [P1] * 3).holds
    assert not is_sa_multipartite(prod, [P1] * 3).holds


def test_random_basis_search_is_seeded_and_sound():
    rho = random_separable_state((2, 2), seed=2)
    a = find_wa_pair(werner(0.5), n_random=20, seed=4)
    b = find_wa_pair(werner(0.5), n_random=20, seed=4)
    assert a.found and a.spectra == b.spectra
    res = find_sa_pair(classical_states("CC", np.diag([0.5, 0.5])), n_random=50, seed=1)
    assert not res.found and res.checked > 0
    assert not find_wa_pair(rho, n_random=10, seed=0).found
