import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmslab import scaling_limit as sl
from kmslab.operator_core import (
    HamiltonianSpec,
    LatticeSpec,
    build_hamiltonian,
    commutator,
    eigh_blocked,
    expect,
    gibbs_state,
    heisenberg_evolve,
    number_operator,
    random_density_matrix,
)


@pytest.fixture(scope="module")
def chain6():
    lat = LatticeSpec.chain(6)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec(perturbation="local-potential"))
    rho0 = gibbs_state(k + v, 1.0)
    return lat, k, v, hp, rho0


def test_zero_coupling_and_zero_time(chain6):
    lat, k, v, hp, rho0 = chain6
    a = number_operator(lat, 0)
    base = expect(rho0, a).real
    for t in (0.0, 3.0, 40.0):
        assert abs(sl.interaction_picture_expectation(rho0, k, v, hp, 0.0, t, a) - base) < 1e-12
    assert abs(sl.interaction_picture_expectation(rho0, k, v, hp, 0.7, 0.0, a) - base) < 1e-14


def test_dual_picture_oracle(chain6):
    lat, k, v, _, rho0 = chain6
    _, _, hp = build_hamiltonian(lat, HamiltonianSpec())
    a = number_operator(lat, 0)
    h = sl.interaction_picture_expectation(rho0, k, v, hp, 0.3, 5.0, a, "heisenberg")
    s = sl.interaction_picture_expectation(rho0, k, v, hp, 0.3, 5.0, a, "schrodinger")
    assert abs(h - s) < 1e-11
    with pytest.raises(ValueError):
        sl.interaction_picture_expectation(rho0, k, v, hp, 0.3, 5.0, a, "dirac")


def test_budget_guard(chain6):
    lat, k, v, hp, rho0 = chain6
    with pytest.raises(sl.BudgetError):
        sl.interaction_picture_expectation(rho0, k, v, hp, 0.1, 1e4, number_operator(lat, 0))
    with pytest.raises(sl.BudgetError):
        sl.ScalingPlan(tau=50.0, lambdas=(0.1, 0.01))


def test_plan_validation():
    with pytest.raises(ValueError, match="decreasing"):
        sl.ScalingPlan(lambdas=(0.1, 0.2))
    with pytest.raises(ValueError):
        sl.ScalingPlan(lambdas=(0.2, -0.1))
    with pytest.raises(ValueError):
        sl.ScalingPlan(sites=9)
    plan = sl.ScalingPlan()
    assert plan.physical_times == pytest.approx((0.5 / 0.16, 0.5 / 0.04, 0.5 / 0.01))


def test_invariant_mean_invariant_state(chain6):
    lat, k, v, _, rho0 = chain6
    a = number_operator(lat, 0)
    for T in (0.5, 7.0, np.inf):
        assert abs(sl.invariant_mean(rho0, k + v, a, T) - expect(rho0, a)) < 1e-12
    with pytest.raises(ValueError):
        sl.invariant_mean(rho0, k + v, a, 0.0)


def test_invariant_mean_infinite_is_pinching(rng):
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    h = k + v
    rho = random_density_matrix(16, rng)
    a = number_operator(lat, 0)
    pinched = sl.pinch(rho, h)
    assert abs(sl.invariant_mean(rho, h, a, np.inf) - expect(pinched, a)) < 1e-13
    assert np.abs(commutator(pinched, h)).max() < 1e-12
    # a further time shift of the pinched state changes nothing
    eig = eigh_blocked(h)
    shifted = heisenberg_evolve(pinched, h, 2.3, eig)
    assert abs(sl.invariant_mean(shifted, h, a, np.inf) - sl.invariant_mean(rho, h, a, np.inf)) < 1e-13


def test_invariant_mean_quadrature_oracle():
    rng = np.random.Generator(np.random.PCG64(4))
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    h = k + v
    rho = random_density_matrix(16, rng)
    a = number_operator(lat, 0)
    closed = sl.invariant_mean(rho, h, a, 50.0)
    quad = sl.invariant_mean_quadrature(rho, h, a, 50.0)
    assert abs(closed - quad) < 1e-9


@given(st.floats(0.01, 5.0))
def test_first_order_response_vanishes_for_pinched_perturbation(t):
    lat = LatticeSpec.chain(4)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec())
    h0 = k + v
    eig = eigh_blocked(h0)
    rho0 = gibbs_state(h0, 1.0, eig)
    a = number_operator(lat, 0)
    assert abs(sl.first_order_response(rho0, h0, sl.pinch(hp, h0, eig), a, t, eig)) < 1e-13


def test_first_order_response_matches_finite_difference():
    lat = LatticeSpec.chain(4)
    k, v, hp = build_hamiltonian(lat, HamiltonianSpec())
    h0 = k + v
    rng = np.random.Generator(np.random.PCG64(8))
    # alpha_0-invariant but not Gibbs, so [rho0, H'] != 0 and the response is nonzero
    rho0 = sl.pinch(random_density_matrix(16, rng), h0)
    a = number_operator(lat, 1)
    t, d = 1.3, 1e-5

    def w(lam):
        return expect(rho0, heisenberg_evolve(a, h0 + lam * hp, t)).real

    fd = (w(d) - w(-d)) / (2 * d)
    exact = sl.first_order_response(rho0, h0, hp, a, t)
    assert abs(exact.imag) < 1e-12
    assert abs(exact.real) > 1e-4
    assert abs(exact.real - fd) < 1e-8


def test_vanhove_zero_perturbation_and_zero_tau():
    plan = sl.ScalingPlan(sites=4)
    rep = sl.vanhove_compare(plan, h_pert_override=np.zeros((16, 16)))
    for kappa in plan.kappas:
        for vals in rep.delta[kappa].values():
            assert max(vals) < 1e-12
    rep0 = sl.vanhove_compare(sl.ScalingPlan(sites=4, tau=0.0))
    for kappa in rep0.delta:
        for vals in rep0.delta[kappa].values():
            assert max(vals) < 1e-13


def test_vanhove_trend_n6():
    rep = sl.vanhove_compare(sl.ScalingPlan())
    assert rep.picture_defect < 1e-11
    for kappa, per_obs in rep.delta.items():
        for name, vals in per_obs.items():
            assert vals[-1] < vals[0], (kappa, name)
    assert rep.verdict
    d = rep.to_dict()
    assert set(d) >= {"delta", "exact", "lindblad", "verdict", "fixed_epsilon_delta"}


def test_unknown_observable_rejected():
    with pytest.raises(ValueError, match="unknown observables"):
        sl.vanhove_compare(sl.ScalingPlan(sites=4, observables=("n7",)))


def test_expectation_trace_rows():
    rows = sl.expectation_trace(sl.ScalingPlan(sites=4), 0.4, points=5)
    assert len(rows) == 5 and rows[0]["t"] == 0.0
    assert rows[-1]["t"] == pytest.approx(0.5 / 0.16)
    lat = LatticeSpec.chain(4)
    k, v, _ = build_hamiltonian(lat, HamiltonianSpec())
    assert rows[0]["value"] == pytest.approx(expect(gibbs_state(k + v, 1.0), number_operator(lat, 0)).real, abs=1e-13)
