"""Weak-coupling (van Hove) scaling harness.

Exact interaction-picture expectations ``w(alpha_0(-t) alpha_lambda(t) A)``
at ``lambda^2 t = tau`` are compared with the dephasing Lindblad flow of the
jump ``W = build_W(H', K + V, eps)``.  The reference uses ``eps = kappa
lambda^2`` and the golden-rule normalization: the kinetic-time generator is
``eps * L_W``, whose Pauli rates ``2 eps |H'_jk|^2 / (eps^2 + mu_jk^2)``
approach ``2 pi |H'_jk|^2 delta(mu_jk)`` as ``eps -> 0``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .lindblad import LindbladGenerator, build_W, evolve
from .operator_core import (
    HamiltonianSpec,
    LatticeSpec,
    build_hamiltonian,
    dagger,
    eigh_blocked,
    expect,
    gibbs_state,
    heisenberg_evolve,
    hopping_term,
    number_operator,
    op_norm,
)

PHASE_BUDGET = 1e4
MAX_SITES = 8


class BudgetError(ValueError):
    """``t * ||H||`` exceeds the phase-accuracy budget."""


def _phi(x):
    """``(e^{ix} - 1) / (ix)`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5j * x, (np.exp(1j * safe) - 1.0) / (1j * safe))


def _check_budget(t, *hs):
    for h in hs:
        if abs(t) * op_norm(h) > PHASE_BUDGET:
            raise BudgetError(f"t*||H|| = {abs(t) * op_norm(h):.3g} exceeds {PHASE_BUDGET:g}")


def interaction_picture_expectation(rho0, k, v, h_pert, lam, t, a, picture="heisenberg",
                                    eig0=None, eig_lam=None) -> float:
    """``Tr(rho0 alpha_0(-t)(alpha_lambda(t)(A)))`` with ``H_lambda = K + V + lambda H'``.

    ``picture="schrodinger"`` propagates the state instead of the observable.
    """
    if rho0.shape[0] > 2**MAX_SITES:
        raise ValueError(f"interaction picture limited to N <= {MAX_SITES}")
    if not (rho0.shape == k.shape == v.shape == h_pert.shape == a.shape):
        raise ValueError("dimension mismatch")
    h0 = k + v
    hl = h0 + lam * h_pert
    _check_budget(t, h0, hl)
    eig0 = eig0 if eig0 is not None else eigh_blocked(h0)
    eig_lam = eig_lam if eig_lam is not None else eigh_blocked(hl)
    if picture == "heisenberg":
        x = heisenberg_evolve(heisenberg_evolve(a, hl, t, eig_lam), h0, -t, eig0)
        return expect(rho0, x).real
    if picture == "schrodinger":
        # rho(t) = e^{-iH_l t} e^{iH_0 t} rho0 e^{-iH_0 t} e^{iH_l t}
        r = heisenberg_evolve(rho0, h0, t, eig0)
        r = heisenberg_evolve(r, hl, -t, eig_lam)
        return expect(r, a).real
    raise ValueError(f"unknown picture {picture!r}")


def invariant_mean(rho0, h, a, T, eig=None, degeneracy_tol=1e-9) -> complex:
    """``(1/T) int_0^T Tr(rho0 alpha_t(A)) dt`` in closed form.

    ``T = inf`` keeps only the pairs of degenerate eigenvalues, i.e. the
    pinching of ``rho0`` onto the eigenspaces of ``H``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    e, v = eig if eig is not None else eigh_blocked(h)
    rt = dagger(v) @ rho0 @ v
    at = dagger(v) @ a @ v
    mu = e[:, None] - e[None, :]
    # Tr(rho alpha_t A) = sum_jk rho_kj A_jk e^{i mu_jk t}
    if np.isinf(T):
        factor = (np.abs(mu) <= degeneracy_tol * max(1.0, np.abs(e).max())).astype(float)
    else:
        factor = _phi(mu * T)
    return complex(np.sum(rt.T * at * factor))


def invariant_mean_quadrature(rho0, h, a, T, eig=None, **quad_kw) -> complex:
    """Adaptive quadrature of the time average (independent of the closed form)."""
    from scipy.integrate import quad

    eig = eig if eig is not None else eigh_blocked(h)
    opts = dict(limit=4000, epsabs=1e-13, epsrel=1e-12)
    opts.update(quad_kw)

    def f(t, part):
        val = expect(rho0, heisenberg_evolve(a, h, t, eig))
        return val.real if part == 0 else val.imag

    re = quad(f, 0.0, T, args=(0,), **opts)[0]
    im = quad(f, 0.0, T, args=(1,), **opts)[0]
    return complex(re, im) / T


def pinch(x, h, eig=None, degeneracy_tol=1e-9):
    """Block-diagonal part of ``x`` with respect to the eigenspaces of ``H``."""
    e, v = eig if eig is not None else eigh_blocked(h)
    mu = e[:, None] - e[None, :]
    mask = np.abs(mu) <= degeneracy_tol * max(1.0, np.abs(e).max())
    return v @ ((dagger(v) @ x @ v) * mask) @ dagger(v)


def first_order_response(rho0, h0, h_pert, a, t, eig=None) -> complex:
    """``d/dlambda Tr(rho0 alpha_lambda(t) A)`` at ``lambda = 0`` for ``alpha_0``-invariant ``rho0``.

    Duhamel: ``i int_0^t Tr([rho0, H'] alpha_0(u) A) du``, evaluated in the
    eigenbasis of ``H0``.
    """
    e, v = eig if eig is not None else eigh_blocked(h0)
    c = dagger(v) @ (rho0 @ h_pert - h_pert @ rho0) @ v
    at = dagger(v) @ a @ v
    mu = e[:, None] - e[None, :]
    return complex(1j * t * np.sum(c.T * at * _phi(mu * t)))


# ---------------------------------------------------------------------------
# Plan and comparison


def observable_registry(lattice):
    n0 = number_operator(lattice, 0)
    n1 = number_operator(lattice, 1)
    return {"n0": n0, "n0n1": n0 @ n1, "bond": hopping_term(lattice, 0, 1)}


DEFAULT_OBSERVABLES = ("n0", "n0n1", "bond")


@dataclass(frozen=True)
class ScalingPlan:
    tau: float = 0.5
    lambdas: tuple = (0.4, 0.2, 0.1)
    observables: tuple = DEFAULT_OBSERVABLES
    sites: int = 6
    boundary: str = "periodic"
    beta: float = 1.0
    hamiltonian: HamiltonianSpec = field(default_factory=lambda: HamiltonianSpec(perturbation="local-potential"))
    kappas: tuple = (0.5, 0.25, 0.1)
    fixed_epsilons: tuple = (0.5, 0.25, 0.1)

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        if not lams or any(x <= 0 for x in lams):
            raise ValueError("lambda values must be positive")
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambda values must be strictly decreasing")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not 2 <= self.sites <= MAX_SITES:
            raise ValueError(f"sites must be in [2, {MAX_SITES}]")
        if any(k <= 0 for k in self.kappas) or any(e <= 0 for e in self.fixed_epsilons):
            raise ValueError("regularization parameters must be positive")
        # rough a-priori budget check: ||H|| <= sum of coefficient magnitudes
        hs = self.hamiltonian
        bound = self.sites * (2 * abs(hs.hopping) + abs(hs.interaction) + abs(hs.chemical_potential)
                              + 2 * abs(hs.perturbation_strength) * max(lams))
        if self.physical_times[-1] * bound > PHASE_BUDGET:
            raise BudgetError(f"t*||H|| up to {self.physical_times[-1] * bound:.3g} exceeds {PHASE_BUDGET:g}")

    @property
    def physical_times(self):
        return tuple(self.tau / lam**2 for lam in self.lambdas)

    def lattice(self):
        return LatticeSpec.chain(self.sites, self.boundary)


def strictly_decreasing(seq):
    return all(b < a for a, b in zip(seq, seq[1:]))


@dataclass
class VanHoveReport:
    tau: float
    lambdas: list
    times: list
    initial: dict
    exact: dict
    picture_defect: float
    lindblad: dict  # kappa -> obs -> list over lambda
    delta: dict  # kappa -> obs -> list over lambda
    decreasing: dict  # kappa -> obs -> bool
    fixed_epsilon_delta: dict  # eps -> obs -> list over lambda
    fixed_epsilon_decreasing: dict
    verdict: bool

    def to_dict(self):
        return asdict(self)


def vanhove_compare(plan: ScalingPlan, h_pert_override=None) -> VanHoveReport:
    lat = plan.lattice()
    k, v, hp = build_hamiltonian(lat, plan.hamiltonian)
    if h_pert_override is not None:
        hp = h_pert_override
    h0 = k + v
    eig0 = eigh_blocked(h0)
    rho0 = gibbs_state(h0, plan.beta, eig0)
    reg = observable_registry(lat)
    unknown = set(plan.observables) - set(reg)
    if unknown:
        raise ValueError(f"unknown observables {sorted(unknown)}; have {sorted(reg)}")
    obs = {name: reg[name] for name in plan.observables}
    initial = {name: expect(rho0, a).real for name, a in obs.items()}

    exact = {name: [] for name in obs}
    picture_defect = 0.0
    for lam, t in zip(plan.lambdas, plan.physical_times):
        eig_l = eigh_blocked(h0 + lam * hp)
        for name, a in obs.items():
            hv = interaction_picture_expectation(rho0, k, v, hp, lam, t, a, "heisenberg", eig0, eig_l)
            sv = interaction_picture_expectation(rho0, k, v, hp, lam, t, a, "schrodinger", eig0, eig_l)
            picture_defect = max(picture_defect, abs(hv - sv))
            exact[name].append(hv)

    def reference(eps):
        if plan.tau == 0 or not np.any(hp):
            return {name: initial[name] for name in obs}
        gen = LindbladGenerator(build_W(hp, h0, eps, eig=eig0))
        rho = evolve(rho0, gen, eps * plan.tau, "dephasing")
        return {name: expect(rho, a).real for name, a in obs.items()}

    lind, delta, dec = {}, {}, {}
    for kappa in plan.kappas:
        refs = [reference(kappa * lam**2) for lam in plan.lambdas]
        lind[kappa] = {name: [r[name] for r in refs] for name in obs}
        delta[kappa] = {name: [abs(x - y) for x, y in zip(exact[name], lind[kappa][name])] for name in obs}
        dec[kappa] = {name: strictly_decreasing(delta[kappa][name]) for name in obs}
    fdelta, fdec = {}, {}
    for eps in plan.fixed_epsilons:
        ref = reference(eps)
        fdelta[eps] = {name: [abs(x - ref[name]) for x in exact[name]] for name in obs}
        fdec[eps] = {name: strictly_decreasing(fdelta[eps][name]) for name in obs}
    verdict = all(all(d.values()) for d in dec.values())
    return VanHoveReport(plan.tau, list(plan.lambdas), list(plan.physical_times), initial, exact,
                         picture_defect, lind, delta, dec, fdelta, fdec, verdict)


def expectation_trace(plan: ScalingPlan, lam, points=51, observable="n0"):
    """Rows ``(lambda, t, w_t(A))`` on ``[0, tau/lambda^2]`` in the interaction picture."""
    lat = plan.lattice()
    k, v, hp = build_hamiltonian(lat, plan.hamiltonian)
    h0 = k + v
    eig0 = eigh_blocked(h0)
    eig_l = eigh_blocked(h0 + lam * hp)
    rho0 = gibbs_state(h0, plan.beta, eig0)
    a = observable_registry(lat)[observable]
    tmax = plan.tau / lam**2
    return [dict(lam=float(lam), t=float(t),
                 value=interaction_picture_expectation(rho0, k, v, hp, lam, t, a, "heisenberg", eig0, eig_l))
            for t in np.linspace(0.0, tmax, points)]


__all__ = [
    "BudgetError", "DEFAULT_OBSERVABLES", "ScalingPlan", "VanHoveReport", "expectation_trace",
    "first_order_response", "interaction_picture_expectation", "invariant_mean",
    "invariant_mean_quadrature", "observable_registry", "pinch", "strictly_decreasing", "vanhove_compare",
]
