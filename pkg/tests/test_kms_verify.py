import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmslab import kms_verify as kv
from kmslab.commuting import invariant_state_family
from kmslab.lindblad import build_W
from kmslab.operator_core import (
    HamiltonianSpec,
    LatticeSpec,
    build_annihilation,
    build_hamiltonian,
    dagger,
    eigh_blocked,
    gibbs_state,
    number_operator,
    random_density_matrix,
    random_hermitian,
)
from kmslab.scaling_limit import pinch


@pytest.fixture(scope="module")
def chain6():
    lat = LatticeSpec.chain(6)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec())
    return lat, k, v, hp


def _probe(lat):
    a0 = build_annihilation(lat, 0)
    return a0 + dagger(a0) + number_operator(lat, 0)


# -- GNS / modular data --------------------------------------------------------

def test_gns_tracial_state():
    omega, md = kv.gns_embed(np.eye(8) / 8)
    assert np.allclose(omega, np.eye(8) / np.sqrt(8), atol=1e-15)
    assert np.allclose(md.delta_matrix(), np.eye(64), atol=1e-13)


def test_gns_postconditions(rng):
    rho = random_density_matrix(8, rng)
    omega, md = kv.gns_embed(rho)
    assert abs(np.vdot(omega, omega) - 1) < 1e-12
    assert np.abs(md.delta(omega) - omega).max() < 1e-12
    assert np.abs(md.modular_flow(omega, 0.7) - omega).max() < 1e-12
    a = rng.normal(size=(8, 8))
    assert abs(md.state(a) - np.trace(rho @ a)) < 1e-12
    # Delta is positive: its eigenvalues r_i / r_j
    assert np.linalg.eigvals(md.delta_matrix()).real.min() > 0


def test_modular_eigenvalue_convention(rng):
    rho = random_density_matrix(4, rng)
    _, md = kv.gns_embed(rho)
    i, j = 1, 3
    unit = np.outer(md.vecs[:, i], md.vecs[:, j].conj())
    assert np.allclose(md.delta(unit), md.r[i] / md.r[j] * unit)


def test_not_faithful_and_regularization():
    rho = np.diag([1.0, 0, 0, 0])
    with pytest.raises(kv.NotFaithfulError):
        kv.gns_embed(rho)
    _, md = kv.gns_embed(rho, regularize=True)
    assert md.regularized and md.r.min() > 0


# -- invariance residual -------------------------------------------------------

@pytest.mark.parametrize("c", [0.5, 1.0, -2.0])
def test_invariance_residual_scalar(rng, c):
    rho = random_density_matrix(4, rng)
    res = kv.invariance_residual(rho, c * np.eye(4))
    assert res.residual == pytest.approx(3 * c * c, rel=1e-12)


def test_invariance_residual_tracial(rng):
    w = random_hermitian(8, rng)
    rho = np.eye(8) / 8
    res = kv.invariance_residual(rho, w)
    expected = 3 * np.linalg.norm(w @ w @ (np.eye(8) / np.sqrt(8)))
    assert res.residual == pytest.approx(expected, rel=1e-12)


def test_invariance_residual_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        kv.invariance_residual(np.eye(4) / 4, np.eye(8))


def test_invariance_residual_decreases_with_off_shell_part():
    lat = LatticeSpec.chain(4)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec())
    h = k + v
    e, vecs = eigh_blocked(h)
    rho = gibbs_state(h, 1.0)
    w = build_W(hp, h, 0.5).matrix
    we = dagger(vecs) @ w @ vecs
    on = np.abs(e[:, None] - e[None, :]) < 1e-9
    res, dual = [], []
    for s in (1.0, 0.5, 0.25, 0.1, 0.0):
        ws = vecs @ np.where(on, we, s * we) @ dagger(vecs)
        r = kv.invariance_residual(rho, ws)
        res.append(r.residual)
        dual.append(r.dual)
    assert all(a > b for a, b in zip(res, res[1:]))
    assert all(a > b for a, b in zip(dual, dual[1:]))


# -- line test and fit ---------------------------------------------------------

def test_line_test_gibbs(chain6):
    lat, k, v, _ = chain6
    h = k + v
    lt = kv.kms_line_test(gibbs_state(h, 1.0), h, _probe(lat))
    assert abs(lt.beta - 1.0) < 1e-12 and lt.line_residual < 1e-11
    assert not lt.flags and all(p.weight > 1e-14 for p in lt.points)


def test_line_test_tracial(chain6):
    lat, k, v, _ = chain6
    lt = kv.kms_line_test(np.eye(64) / 64, k + v, _probe(lat))
    assert abs(lt.beta) < 1e-14 and lt.line_residual < 1e-13


def test_line_test_detects_non_gibbs(chain6):
    lat, k, v, _ = chain6
    h = k + v
    rho = pinch(gibbs_state(k, 1.0), h)
    lt = kv.kms_line_test(rho, h, _probe(lat))
    assert lt.line_residual > 1e-2


def test_line_test_preconditions(chain6, rng):
    lat, k, v, _ = chain6
    with pytest.raises(kv.NotInvariantError):
        kv.kms_line_test(gibbs_state(k, 1.0), k + v, _probe(lat))
    lt = kv.kms_line_test(np.eye(4) / 4, np.eye(4), np.ones((4, 4)))
    assert "beta-indeterminate" in lt.flags


def test_fit_beta_cases(chain6):
    lat, k, v, _ = chain6
    h = k + v
    beta, res = kv.fit_beta(gibbs_state(h, 0.8), h)
    assert beta == pytest.approx(0.8, abs=1e-12) and res < 1e-12
    beta, res = kv.fit_beta(np.eye(64) / 64, h)
    assert abs(beta) < 1e-12


def test_fit_beta_scaled_family_cross_module():
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    h = k + v
    rho, inv = invariant_state_family(k, v, 2.0, 1.0)
    assert inv > 1e-3
    with pytest.raises(kv.NotInvariantError):
        kv.fit_beta(rho, h)
    _, res = kv.fit_beta(pinch(rho, h), h)
    assert res > 1e-3


def test_line_and_fit_agree_on_gibbs(rng):
    for beta in (0.2, 1.0, 3.0):
        # moderate spectrum: r_min / r_max stays far above machine precision
        h = random_hermitian(8, rng, scale=0.3)
        rho = gibbs_state(h, beta)
        lt = kv.kms_line_test(rho, h, rng.normal(size=(8, 8)))
        assert lt.line_residual < 1e-10
        assert abs(lt.beta - kv.fit_beta(rho, h)[0]) < 1e-10


# -- two-point KMS -------------------------------------------------------------

def test_two_point_gibbs_and_tracial(chain6, rng):
    lat, k, v, _ = chain6
    h = k + v
    a0 = build_annihilation(lat, 0)
    rho = gibbs_state(h, 1.0)
    for a, b in ((a0, dagger(a0)), (rng.normal(size=(64, 64)), rng.normal(size=(64, 64)))):
        assert abs(kv.kms_two_point_check(rho, h, a, b, 1.0, relative=True)) < 1e-10
    a, b = rng.normal(size=(64, 64)), rng.normal(size=(64, 64))
    assert abs(kv.kms_two_point_check(np.eye(64) / 64, h, a, b, 0.0)) < 1e-13


def test_two_point_wrong_beta(chain6):
    lat, k, v, _ = chain6
    h = k + v
    a0 = build_annihilation(lat, 0)
    res = kv.kms_two_point_check(gibbs_state(h, 1.0), h, a0, dagger(a0), 0.5)
    assert abs(res) > 1e-3


def test_two_point_large_beta_no_overflow():
    h = np.diag([0.0, 400.0])
    rho = gibbs_state(h, 2.0)
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert abs(kv.kms_two_point_check(rho, h, a, a.T, 2.0)) < 1e-10
    with pytest.raises(ValueError):
        kv.kms_two_point_check(rho, h, a, a.T, -1.0)


def _fixtures():
    rng = np.random.Generator(np.random.PCG64(2024))
    out = []
    for i in range(10):
        h = random_hermitian(8, rng, scale=0.3)
        out.append((h, gibbs_state(h, 0.3 + 0.2 * i), True))
    for _ in range(10):
        h = random_hermitian(8, rng)
        _, vecs = np.linalg.eigh(h)
        r = rng.dirichlet(np.ones(8))
        out.append((h, (vecs * r) @ dagger(vecs), False))
    return out


@pytest.mark.parametrize("h,rho,is_gibbs", _fixtures())
def test_two_point_iff_affine_fit(h, rho, is_gibbs):
    beta, affine = kv.fit_beta(rho, h)
    rng = np.random.Generator(np.random.PCG64(1))
    a, b = rng.normal(size=(8, 8)), rng.normal(size=(8, 8))
    two = abs(kv.kms_two_point_check(rho, h, a, b, max(beta, 0.0), relative=True))
    assert (two < 1e-10) == (affine < 1e-8) == is_gibbs


@given(st.floats(0.0, 5.0))
def test_gibbs_kms_property(beta):
    rng = np.random.Generator(np.random.PCG64(3))
    # beta * spread(H) stays below ~15 so the smallest Gibbs weights keep their relative accuracy
    h = random_hermitian(4, rng, scale=0.3)
    rho = gibbs_state(h, beta)
    a, b = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    assert abs(kv.kms_two_point_check(rho, h, a, b, beta, relative=True)) < 1e-10
