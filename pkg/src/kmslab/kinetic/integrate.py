"""Time integration of the kinetic equation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collision import collision_operator
from .equilibrium import conserved_charges, entropy_density, fit_fermi_dirac

CLAMP_TOL = 1e-12


class StepSizeError(RuntimeError):
    """RK4 step pushed the occupation out of [0, 1] beyond the clamp tolerance."""


@dataclass(frozen=True)
class KineticState:
    rho: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if not np.all(np.isfinite(rho)):
            raise ValueError("occupation has non-finite entries")
        if rho.min() < 0 or rho.max() > 1:
            raise ValueError("occupation outside [0, 1]")
        object.__setattr__(self, "rho", rho)


def _rk4(rho, dtau, kernel):
    k1 = collision_operator(rho, kernel)
    k2 = collision_operator(rho + 0.5 * dtau * k1, kernel)
    k3 = collision_operator(rho + 0.5 * dtau * k2, kernel)
    k4 = collision_operator(rho + dtau * k3, kernel)
    return rho + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step(state: KineticState, dtau, kernel) -> KineticState:
    if not dtau > 0:
        raise ValueError("dtau must be positive")
    new = _rk4(state.rho, dtau, kernel)
    lo, hi = new.min(), new.max()
    if lo < -CLAMP_TOL or hi > 1 + CLAMP_TOL or not np.all(np.isfinite(new)):
        raise StepSizeError(
            f"occupation left [0,1] (min {lo:.3e}, max {hi:.3e}); reduce dtau below {dtau:g}"
        )
    return KineticState(np.clip(new, 0.0, 1.0), state.tau + dtau)


@dataclass
class Trajectory:
    rho: np.ndarray
    tau: float
    converged: bool
    steps: int = 0
    checkpoints: list = field(default_factory=list)
    min_entropy_step: float = np.inf
    n_drift: float = 0.0
    e_drift: float = 0.0
    residual: float = np.inf
    halvings: int = 0

    def __iter__(self):
        yield self.rho
        yield self.tau
        yield self.converged


CHECKPOINT_FIELDS = ("tau", "entropy", "N", "E", "collision_norm", "beta_fit", "mu_fit")


def _checkpoint(rho, tau, kernel, cnorm):
    n, e = conserved_charges(rho, kernel.dispersion)
    if np.all((rho > 0) & (rho < 1)):
        fit = fit_fermi_dirac(rho, kernel.dispersion)
        b, m = fit.beta, fit.mu
    else:
        b = m = float("nan")
    return dict(tau=tau, entropy=entropy_density(rho), N=n, E=e, collision_norm=cnorm, beta_fit=b, mu_fit=m)


def evolve_to_stationary(rho0, kernel, tol=1e-10, tau_max=100.0, dtau=0.01,
                         checkpoint_every=10, min_dtau=1e-8) -> Trajectory:
    """RK4 until ``||C[rho]||_inf < tol`` or ``tau_max``.

    The step is halved whenever it leaves the Pauli bounds.  The result
    records the smallest per-step entropy change and the largest relative
    drift in N and E seen along the way.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    state = KineticState(rho0)
    rho = state.rho
    n0, e0 = conserved_charges(rho, kernel.dispersion)
    nscale = max(abs(n0), 1e-300)
    escale = max(abs(e0), np.abs(kernel.dispersion).sum() * 1e-3, 1e-300)
    s_prev = entropy_density(rho)
    c = collision_operator(rho, kernel)
    cnorm = float(np.max(np.abs(c), initial=0.0))
    traj = Trajectory(rho, 0.0, False)
    traj.checkpoints.append(_checkpoint(rho, 0.0, kernel, cnorm))
    nsteps = 0
    while cnorm >= tol and state.tau < tau_max - 1e-15:
        h = min(dtau, tau_max - state.tau)
        try:
            state = step(state, h, kernel)
        except StepSizeError:
            dtau *= 0.5
            traj.halvings += 1
            if dtau < min_dtau:
                raise
            continue
        nsteps += 1
        s = entropy_density(state.rho)
        traj.min_entropy_step = min(traj.min_entropy_step, s - s_prev)
        s_prev = s
        n, e = conserved_charges(state.rho, kernel.dispersion)
        traj.n_drift = max(traj.n_drift, abs(n - n0) / nscale)
        traj.e_drift = max(traj.e_drift, abs(e - e0) / escale)
        c = collision_operator(state.rho, kernel)
        cnorm = float(np.max(np.abs(c)))
        if nsteps % checkpoint_every == 0 or cnorm < tol:
            traj.checkpoints.append(_checkpoint(state.rho, state.tau, kernel, cnorm))
    traj.rho, traj.tau, traj.steps = state.rho, state.tau, nsteps
    traj.converged = cnorm < tol
    traj.residual = cnorm
    return traj
