import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmslab import commuting as cm
from kmslab.operator_core import (
    HamiltonianSpec,
    LatticeSpec,
    build_creation,
    build_hamiltonian,
    commutator,
    gibbs_state,
    number_operator,
    op_norm,
    random_hermitian,
)


@pytest.fixture(scope="module")
def kv4():
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec(hopping=1.0, interaction=1.0))
    return lat, k, v


def test_scaled_generator_identities(kv4):
    _, k, v = kv4
    assert np.array_equal(cm.scaled_generator(k, v, 1.0), k + v)
    assert np.allclose(cm.scaled_generator(k, v, 3.0), cm.scaled_generator(v, k, 1 / 3.0), atol=1e-14)
    with pytest.raises(ValueError):
        cm.scaled_generator(k, v, 0.0)


def test_scaled_generator_spectrum_regression(kv4):
    _, k, v = kv4
    ev = np.linalg.eigvalsh(cm.scaled_generator(k, v, 2.0))
    r = 3.757804885  # archived eigensolver output, N=4 periodic chain, J=U=1, gamma=2
    expected = [-4, -r, -r, -3, 0, 0, 0, 0.5, 0.5, 1, 1, 2, 4, r + 0.5, r + 0.5, 5]
    assert np.allclose(ev, expected, atol=1e-8)


def test_defect_vanishes_for_commuting_pairs(kv4, rng):
    lat, _, _ = kv4
    a = build_creation(lat, 0)
    k0, v0, _ = build_hamiltonian(lat, HamiltonianSpec(interaction=0.0))
    assert cm.derivation_commutator_defect(k0 + v0, 2 * k0 + v0 / 2, a).defect == 0.0
    h = random_hermitian(16, rng)
    assert cm.derivation_commutator_defect(h, h, a).defect < 1e-13


def test_defect_two_evaluation_orders(kv4):
    lat, k, v = kv4
    a = build_creation(lat, 0)
    d = cm.derivation_commutator_defect(k + v, 2 * k + v / 2, a)
    direct = abs(0.5 - 2.0) * op_norm(commutator(commutator(k, v), a))
    assert d.defect == pytest.approx(direct, abs=1e-12)
    assert d.defect_nested == pytest.approx(direct, abs=1e-12)
    assert d.defect == pytest.approx(3.0, abs=1e-12)


@given(st.floats(0.1, 10.0), st.sampled_from(["cre", "pair", "num"]))
def test_scaling_identity(gamma, probe_name):
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    probes = {"cre": build_creation(lat, 0),
              "pair": build_creation(lat, 0) @ build_creation(lat, 1),
              "num": number_operator(lat, 0)}
    a = probes[probe_name]
    lhs = commutator(commutator(k + v, cm.scaled_generator(k, v, gamma)), a)
    rhs = (1 / gamma - gamma) * commutator(commutator(k, v), a)
    assert np.abs(lhs - rhs).max() < 1e-12 * max(1.0, abs(1 / gamma - gamma))


def test_defect_ratio_is_gamma_independent(kv4):
    lat, k, v = kv4
    a = build_creation(lat, 0)
    ratios = []
    for g in (0.5, 2.0, 4.0):
        d = cm.derivation_commutator_defect(k + v, cm.scaled_generator(k, v, g), a).defect
        ratios.append(d / abs(1 / g - g))
    assert np.ptp(ratios) < 1e-12
    assert cm.derivation_commutator_defect(k + v, cm.scaled_generator(k, v, 1.0), a).defect == 0.0


def test_invariant_state_family(kv4):
    _, k, v = kv4
    rho, inv = cm.invariant_state_family(k, v, 1.0, 0.7)
    assert np.allclose(rho, gibbs_state(k + v, 0.7)) and inv < 1e-12
    _, inv2 = cm.invariant_state_family(k, v, 2.0, 1.0)
    assert inv2 == pytest.approx(0.38745315362300925, rel=1e-9)  # archived


def test_commuting_model_has_no_invariance_defect():
    # V diagonal in K's eigenbasis: [K, V] = 0 and the centrality defect vanishes
    lat = LatticeSpec.chain(4)
    k, _, _ = build_hamiltonian(lat, HamiltonianSpec(interaction=0.0))
    v = k @ k
    d = cm.derivation_commutator_defect(k, v, build_creation(lat, 0))
    assert d.centrality < 1e-12
    for g in (0.5, 2.0, 4.0):
        for b in (0.3, 1.0, 3.0):
            assert cm.invariant_state_family(k, v, g, b)[1] < 1e-10


def test_centrality_defect_of_scalar():
    assert cm.centrality_defect(2j * np.eye(4)) == 0.0
    assert cm.centrality_defect(np.diag([1j, -1j])) == pytest.approx(1.0)


def test_defect_table_rows(kv4):
    lat, k, v = kv4
    rows = cm.defect_table(k, v, [0.5, 1.0], [1.0, 2.0], build_creation(lat, 0))
    assert len(rows) == 4
    assert set(rows[0]) == {"gamma", "beta", "commutator_defect", "centrality_defect", "invariance_defect"}
    assert all(r["commutator_defect"] == 0.0 for r in rows if r["gamma"] == 1.0)
