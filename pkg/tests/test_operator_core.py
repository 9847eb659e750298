import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmslab.operator_core import (
    HamiltonianSpec,
    LatticeError,
    LatticeSpec,
    anticommutator,
    build_annihilation,
    build_creation,
    build_hamiltonian,
    check_density_matrix,
    commutator,
    dagger,
    eigh_blocked,
    gibbs_state,
    heisenberg_evolve,
    momentum_correlations,
    number_operator,
    occupation,
    op_norm,
    random_density_matrix,
    random_hermitian,
    total_number,
    translate,
    two_point,
    von_neumann_entropy,
)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_car_relations(n):
    lat = LatticeSpec.chain(n)
    cre = [build_creation(lat, i) for i in range(n)]
    ann = [dagger(c) for c in cre]
    eye = np.eye(lat.dim)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            worst = max(worst, np.abs(anticommutator(ann[i], cre[j]) - (i == j) * eye).max())
            worst = max(worst, np.abs(anticommutator(cre[i], cre[j])).max())
    assert worst < 1e-14


def test_creation_nilpotent_and_isometric():
    lat = LatticeSpec.chain(6)
    c = build_creation(lat, 0)
    assert np.abs(c @ c).max() == 0.0
    assert abs(op_norm(c) - 1.0) < 1e-12


def test_site_out_of_range():
    lat = LatticeSpec.chain(3)
    with pytest.raises(IndexError):
        build_creation(lat, 3)
    with pytest.raises(IndexError):
        build_creation(lat, -1)


def test_size_cap():
    with pytest.raises(LatticeError, match="cap"):
        LatticeSpec.chain(15)


def test_hamiltonian_gauge_invariance():
    lat = LatticeSpec.chain(6)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec())
    n_tot = total_number(lat)
    for h in (k, v, hp):
        assert np.allclose(h, dagger(h), atol=1e-14)
        assert np.abs(commutator(h, n_tot)).max() < 1e-13


def test_zero_interaction_gives_zero_v():
    lat = LatticeSpec.chain(4)
    _, v, _ = build_hamiltonian(lat, HamiltonianSpec(interaction=0.0))
    assert not np.any(v)


def test_two_site_one_particle_spectrum():
    # one-particle hopping matrix [[0,-1],[-1,0]] has eigenvalues -1, +1
    lat = LatticeSpec.chain(2, "open")
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec(hopping=1.0, interaction=1.0))
    one = [1, 2]  # |01>, |10>
    h1 = (k + v)[np.ix_(one, one)]
    assert np.allclose(np.linalg.eigvalsh(h1), [-1.0, 1.0], atol=1e-14)


def test_gibbs_infinite_temperature():
    lat = LatticeSpec.chain(3)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    assert np.allclose(gibbs_state(k + v, 0.0), np.eye(8) / 8, atol=1e-15)


def test_gibbs_commutes(rng):
    h = random_hermitian(16, rng)
    rho = gibbs_state(h, 0.7)
    assert np.abs(commutator(rho, h)).max() < 1e-13
    check_density_matrix(rho)


def test_gibbs_single_site_closed_form():
    lat = LatticeSpec.chain(1)
    rho = gibbs_state(number_operator(lat, 0), 1.0)
    z = 1 + np.exp(-1.0)
    # index 0 is the empty state
    assert np.allclose(rho, np.diag([1 / z, np.exp(-1.0) / z]), atol=1e-15)


def test_gibbs_large_beta_no_overflow(rng):
    h = random_hermitian(8, rng, scale=100.0)
    rho = gibbs_state(h, 50.0)
    assert np.all(np.isfinite(rho))
    assert abs(np.trace(rho) - 1) < 1e-12


def test_gibbs_is_stationary_point_of_free_energy(rng):
    # moderate spectrum keeps the third derivative (and the O(dt^2) error) small
    h = random_hermitian(8, rng, scale=0.25)
    beta = 0.8
    rho = gibbs_state(h, beta)

    def functional(r):
        return von_neumann_entropy(r) - beta * np.trace(r @ h).real

    f0 = functional(rho)
    dt = 1e-5
    for _ in range(20):
        d = random_hermitian(8, rng)
        d -= np.trace(d) / 8 * np.eye(8)
        d /= np.abs(np.linalg.eigvalsh(d)).max()
        deriv = (functional(rho + dt * d) - functional(rho - dt * d)) / (2 * dt)
        assert abs(deriv) < 1e-8
        assert functional(rho + 1e-3 * d) < f0


def test_heisenberg_identity_and_isometry(rng):
    h = random_hermitian(32, rng)
    a = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    assert np.allclose(heisenberg_evolve(a, h, 0.0), a)
    assert abs(op_norm(heisenberg_evolve(a, h, 1.3)) - op_norm(a)) < 1e-12 * op_norm(a)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_heisenberg_group_property(t, s):
    rng = np.random.Generator(np.random.PCG64(7))
    h = random_hermitian(8, rng)
    a = random_hermitian(8, rng)
    eig = eigh_blocked(h)
    lhs = heisenberg_evolve(heisenberg_evolve(a, h, s, eig), h, t, eig)
    assert np.allclose(lhs, heisenberg_evolve(a, h, t + s, eig), atol=1e-12)


def test_rabi_oscillation():
    lat = LatticeSpec.chain(2, "open")
    k, _, _ = build_hamiltonian(lat, HamiltonianSpec(hopping=1.0, interaction=0.0))
    n0 = number_operator(lat, 0)
    psi = np.zeros(4)
    psi[2] = 1.0  # |10>: particle on site 0
    for t in np.linspace(0, 3, 7):
        val = psi @ heisenberg_evolve(n0, k, t) @ psi
        assert abs(val - np.cos(t) ** 2) < 1e-13


def test_translate_basic():
    lat = LatticeSpec.chain(5)
    a = build_creation(lat, 2)
    assert np.array_equal(translate(a, lat, 0), a)
    for i in range(5):
        for j in range(5):
            assert np.allclose(translate(number_operator(lat, i), lat, j), number_operator(lat, (i + j) % 5))


def test_translate_creation_and_order():
    lat = LatticeSpec.chain(4)
    for i in range(4):
        assert np.allclose(translate(build_creation(lat, i), lat, 1), build_creation(lat, (i + 1) % 4))
    a = build_creation(lat, 0) @ build_annihilation(lat, 2) + number_operator(lat, 1)
    assert np.allclose(translate(a, lat, 4), a)


def test_translate_is_star_automorphism(rng):
    lat = LatticeSpec.chain(4)
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    b = rng.normal(size=(16, 16))
    assert np.allclose(translate(a @ b, lat, 1), translate(a, lat, 1) @ translate(b, lat, 1))
    assert np.allclose(translate(dagger(a), lat, 3), dagger(translate(a, lat, 3)))


def test_translation_invariance_of_hamiltonian():
    lat = LatticeSpec.chain(6)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    assert np.abs(translate(k, lat, 1) - k).max() < 1e-13
    assert np.abs(translate(v, lat, 1) - v).max() < 1e-13


def test_translate_2d_grid():
    lat = LatticeSpec.grid(2, 3)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    for disp in ((1, 0), (0, 1)):
        assert np.abs(translate(k + v, lat, disp) - (k + v)).max() < 1e-13


def test_translate_open_boundary_rejected():
    lat = LatticeSpec.chain(4, "open")
    with pytest.raises(LatticeError):
        translate(number_operator(lat, 0), lat, 1)


def test_tracial_occupation():
    lat = LatticeSpec.chain(4)
    assert np.allclose(occupation(np.eye(16) / 16, lat), 0.5, atol=1e-15)


def test_free_gibbs_occupation_is_fermi_dirac():
    lat = LatticeSpec.chain(6)
    k, _, _ = build_hamiltonian(lat, HamiltonianSpec(interaction=0.0))
    beta = 1.0
    rho = gibbs_state(k, beta)
    p = 2 * np.pi * np.arange(6) / 6
    expected = 1 / (1 + np.exp(-2 * beta * np.cos(p)))
    assert np.abs(occupation(rho, lat) - expected).max() < 1e-10
    g = momentum_correlations(rho, lat)
    assert np.abs(g - np.diag(np.diag(g))).max() < 1e-12


def test_interacting_translation_invariant_state_is_diagonal_in_momentum():
    lat = LatticeSpec.chain(6)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    g = momentum_correlations(gibbs_state(k + v, 0.9), lat)
    assert np.abs(g - np.diag(np.diag(g))).max() < 1e-12


def test_two_point_plane_waves_and_shapes():
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    rho = gibbs_state(k + v, 1.0)
    occ = occupation(rho, lat)
    for p in range(4):
        e = np.zeros(4)
        e[p] = 1.0
        assert abs(two_point(rho, lat, e, e) - occ[p]) < 1e-13
    with pytest.raises(ValueError):
        two_point(rho, lat, np.ones(3), np.ones(4))


def test_random_density_matrix_valid(rng):
    check_density_matrix(random_density_matrix(8, rng))
    check_density_matrix(random_density_matrix(8, rng, rank=2))


def test_hamiltonian_spec_validation():
    with pytest.raises(ValueError):
        HamiltonianSpec(hopping=float("nan"))
    with pytest.raises(ValueError):
        HamiltonianSpec(coupling=-1.0)
    with pytest.raises(ValueError):
        HamiltonianSpec(perturbation="nope")
