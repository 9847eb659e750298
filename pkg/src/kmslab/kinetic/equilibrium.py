"""Fermi-Dirac occupations, conserved charges, entropy and the inverse (N, E) -> (beta, mu) map."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, xlogy

log = logging.getLogger(__name__)


def _eps(grid, dispersion):
    eps = np.asarray(dispersion, dtype=float)
    if grid is not None and eps.shape != (grid.size,):
        raise ValueError("dispersion does not match the grid")
    return eps


def fermi_dirac(beta, mu, grid, dispersion):
    """``1 / (1 + exp(beta (eps - mu)))``.  Negative ``beta`` is allowed but logged."""
    if beta < 0:
        log.info("negative temperature occupation requested (beta=%g)", beta)
    eps = _eps(grid, dispersion)
    return expit(-beta * (eps - mu))


def entropy_density(rho) -> float:
    rho = np.asarray(rho, dtype=float)
    return float(-np.sum(xlogy(rho, rho) + xlogy(1.0 - rho, 1.0 - rho)))


def conserved_charges(rho, dispersion):
    rho = np.asarray(rho, dtype=float)
    return float(rho.sum()), float(np.dot(dispersion, rho))


def check_occupation(rho, tol=0.0):
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise ValueError("occupation has non-finite entries")
    if rho.min(initial=0.0) < -tol or rho.max(initial=0.0) > 1.0 + tol:
        raise ValueError("occupation outside [0, 1]")
    return rho


class DomainError(ValueError):
    """Requested charges cannot be reached by any Fermi-Dirac occupation."""


@dataclass
class BetaMu:
    beta: float
    mu: float
    method: str = "newton"
    residual: float = 0.0
    iterations: int = 0

    def __iter__(self):
        yield self.beta
        yield self.mu


def attainable_energy(n_target, dispersion):
    """Closed interval of energies reachable with ``sum rho = n_target`` and ``0 <= rho <= 1``."""
    eps = np.sort(np.asarray(dispersion, dtype=float))

    def fill(e):
        k = int(math.floor(n_target))
        frac = n_target - k
        total = e[:k].sum()
        if frac > 0 and k < len(e):
            total += frac * e[k]
        return float(total)

    return fill(eps), fill(eps[::-1])


def _charges(beta, alpha, eps):
    rho = expit(alpha - beta * eps)
    return rho, rho.sum(), np.dot(eps, rho)


def solve_beta_mu(n_target, e_target, grid, dispersion, tol=1e-12, max_iter=200) -> BetaMu:
    """Invert ``(N, E)`` to the Fermi-Dirac parameters.

    Newton iteration in ``(beta, alpha = beta mu)`` on the convex potential
    ``F = sum log(1 + e^{alpha - beta eps}) - alpha N + beta E``, whose
    gradient is the charge mismatch and whose Hessian is the analytic
    Jacobian.  Falls back to nested bisection if Newton stalls.
    """
    eps = _eps(grid, dispersion)
    n = len(eps)
    if not 0 < n_target < n:
        raise DomainError(f"N={n_target} outside attainable range (0, {n})")
    e_lo, e_hi = attainable_energy(n_target, eps)
    slack = 1e-12 * max(1.0, np.abs(eps).sum())
    if not e_lo + slack < e_target < e_hi - slack:
        raise DomainError(f"E={e_target} outside attainable range ({e_lo}, {e_hi}) at N={n_target}")
    scale = np.array([n, max(np.abs(eps).sum(), 1e-300)])

    def resid(b, a):
        _, nn, ee = _charges(b, a, eps)
        return np.array([nn - n_target, ee - e_target])

    def potential(b, a):
        return np.logaddexp(0.0, a - b * eps).sum() - a * n_target + b * e_target

    beta, alpha = 0.0, math.log(n_target / (n - n_target))
    it = 0
    for it in range(1, max_iter + 1):
        rho, nn, ee = _charges(beta, alpha, eps)
        g = np.array([nn - n_target, ee - e_target])
        if np.max(np.abs(g) / scale) < tol:
            return _result(beta, alpha, "newton", g, scale, it)
        v = rho * (1 - rho)
        # d/d(alpha), d/d(beta) of (N, E); F-gradient in (alpha, -beta) ordering
        jac = np.array([[v.sum(), -np.dot(eps, v)], [np.dot(eps, v), -np.dot(eps * eps, v)]])
        try:
            da, db = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            break
        f0 = potential(beta, alpha)
        t = 1.0
        while t > 1e-12:
            if potential(beta + t * db, alpha + t * da) <= f0 + 1e-14 * abs(f0):
                break
            t *= 0.5
        else:
            break
        beta, alpha = beta + t * db, alpha + t * da
        if not (math.isfinite(beta) and math.isfinite(alpha)):
            break
    g = resid(beta, alpha)
    if np.max(np.abs(g) / scale) < tol:
        return _result(beta, alpha, "newton", g, scale, it)
    log.warning("Newton did not converge for (N, E)=(%g, %g); using bisection", n_target, e_target)
    beta, alpha = _bisect(n_target, e_target, eps)
    return _result(beta, alpha, "bisection", resid(beta, alpha), scale, it)


def _result(beta, alpha, method, g, scale, it):
    mu = alpha / beta if beta != 0 else 0.0
    return BetaMu(float(beta), float(mu), method, float(np.max(np.abs(g) / scale)), it)


def _alpha_for(beta, n_target, eps):
    lo, hi = -1.0, 1.0
    f = lambda a: expit(a - beta * eps).sum() - n_target
    while f(lo) > 0:
        lo *= 2
    while f(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisect(n_target, e_target, eps):
    # at fixed N, E(beta) is strictly decreasing
    def e_of(b):
        a = _alpha_for(b, n_target, eps)
        return np.dot(eps, expit(a - b * eps)) - e_target

    lo, hi = -1.0, 1.0
    while e_of(lo) < 0:
        lo *= 2
    while e_of(hi) > 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if e_of(mid) > 0:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    return beta, _alpha_for(beta, n_target, eps)


@dataclass
class FermiDiracFit:
    beta: float
    mu: float
    max_residual: float
    flags: list = field(default_factory=list)

    def __iter__(self):
        yield self.beta
        yield self.mu
        yield self.max_residual


def fit_fermi_dirac(rho, dispersion, beta_tol=1e-12) -> FermiDiracFit:
    """Least-squares line ``logit rho = -beta eps + beta mu``.

    Flags: ``"degenerate-dispersion"`` (all energies equal, beta and mu
    indeterminate; beta=0, mu=nan returned) and ``"infinite-temperature"``
    (beta ~ 0, mu set to 0 by convention).
    """
    rho = np.asarray(rho, dtype=float)
    eps = np.asarray(dispersion, dtype=float)
    if np.any(rho <= 0) or np.any(rho >= 1):
        raise ValueError("fit_fermi_dirac needs 0 < rho < 1 everywhere")
    y = np.log(rho) - np.log1p(-rho)
    flags = []
    if np.ptp(eps) <= 1e-12 * max(1.0, np.abs(eps).max()):
        flags.append("degenerate-dispersion")
        return FermiDiracFit(0.0, float("nan"), float(np.max(np.abs(y - y.mean()))), flags)
    a = np.column_stack([eps, np.ones_like(eps)])
    (slope, icpt), *_ = np.linalg.lstsq(a, y, rcond=None)
    res = float(np.max(np.abs(a @ np.array([slope, icpt]) - y)))
    beta = -slope
    if abs(beta) <= beta_tol:
        flags.append("infinite-temperature")
        return FermiDiracFit(0.0, 0.0, res, flags)
    if beta < 0:
        flags.append("negative-temperature")
    return FermiDiracFit(float(beta), float(icpt / beta), res, flags)
