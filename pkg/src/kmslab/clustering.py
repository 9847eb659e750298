"""Spatial and temporal clustering, and Lieb-Robinson cone fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operator_core import commutator, eigh_blocked, expect, heisenberg_evolve, is_hermitian, translate

FLOOR = 1e-15
LR_FLOOR = 1e-14


class FitError(ValueError):
    pass


@dataclass
class CorrelatorSample:
    value: float
    j: float | None = None
    t: float | None = None
    observables: tuple = ()


def _check_separation(lattice, j):
    if not lattice.periodic:
        raise ValueError("translations require a periodic lattice")
    if j < 0 or j > lattice.sites / 2:
        raise ValueError(f"separation {j} exceeds half the torus ({lattice.sites}/2)")


def connected_correlator_complex(rho, q1, q2, j, lattice) -> complex:
    """``w(Q1 sigma_j Q2) - w(Q1) w(Q2)``, evaluated as ``w(Q1 (sigma_j Q2 - w(Q2)))``.

    Centering with ``w(Q2) = Tr(rho Q2) / Tr(rho)`` makes ``Q2 = 1`` give 0 exactly.
    """
    _check_separation(lattice, j)
    q2j = translate(q2, lattice, j)
    tr = np.trace(rho)
    centered = q2j - (expect(rho, q2) / tr) * np.eye(q2j.shape[0])
    return expect(rho, q1, centered) / tr


def connected_correlator(rho, q1, q2, j, lattice) -> float:
    return abs(connected_correlator_complex(rho, q1, q2, j, lattice))


@dataclass
class DecayFit:
    prefactor: float
    rate: float
    goodness: float
    window: tuple
    points: int
    excluded: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    fitted: bool = True

    @property
    def K(self):
        return self.prefactor

    @property
    def M(self):
        return self.rate

    def bound(self, j):
        return self.prefactor * np.exp(-self.rate * np.asarray(j, dtype=float))


def _r2(y, yhat):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _as_pairs(samples):
    out = []
    for s in samples:
        if isinstance(s, CorrelatorSample):
            out.append((float(s.j), float(s.value)))
        else:
            out.append((float(s[0]), float(s[1])))
    return out


def fit_decay(samples, min_points=4, floor=FLOOR) -> DecayFit:
    """Least squares ``log value = log K - M j``.

    Values at or below ``floor`` are excluded and listed in ``excluded``.
    Flags: ``"non-decaying"`` when ``M <= 0``.  ``min_points`` is the
    minimum number of usable samples (default 4).
    """
    pairs = _as_pairs(samples)
    good = [(j, v) for j, v in pairs if v > floor]
    excluded = [(j, v) for j, v in pairs if v <= floor]
    if not good:
        return DecayFit(float("nan"), float("nan"), float("nan"), (), 0, excluded, ["no-fit"], False)
    if len(good) < min_points:
        raise FitError(f"need at least {min_points} samples above the floor, got {len(good)}")
    j = np.array([p[0] for p in good])
    y = np.log([p[1] for p in good])
    if np.ptp(j) == 0:
        raise FitError("all samples at the same separation")
    a = np.column_stack([np.ones_like(j), -j])
    (logk, m), *_ = np.linalg.lstsq(a, y, rcond=None)
    flags = []
    if m <= 1e-12:
        flags.append("non-decaying")
        m = max(m, 0.0) if abs(m) <= 1e-12 else m
    return DecayFit(float(math.exp(logk)), float(m), _r2(y, a @ np.array([logk, m])),
                    (float(j.min()), float(j.max())), len(good), excluded, flags)


def multi_cluster_defect(rho, observables, j, lattice) -> float:
    """``|w(Q1 sigma_j(Q2 sigma_j(Q3 ...))) - prod w(Q_l)|``.

    Nested placement puts ``Q_l`` at offset ``(l-1) j``; the furthest one must
    stay within half the torus, i.e. ``(n - 1) j <= N/2``.
    """
    n = len(observables)
    if n == 0:
        raise ValueError("need at least one observable")
    if not lattice.periodic:
        raise ValueError("translations require a periodic lattice")
    if (n - 1) * j > lattice.sites / 2:
        raise ValueError(f"chain of {lattice.sites} sites too short for n={n} at spacing {j}")
    placed = [translate(q, lattice, l * j) if l else q for l, q in enumerate(observables)]
    joint = expect(rho, *placed)
    prod = 1.0 + 0j
    for q in observables:
        prod *= expect(rho, q)
    return abs(joint - prod)


@dataclass
class TimeClusterResult:
    defect: float
    gap: float
    invariant: bool
    invariance_defect: float


def time_multicluster_defect(rho, observables, times, h, eig=None) -> TimeClusterResult:
    """``|w(prod_l alpha(t_l) A_l) - prod_l w(A_l)|`` with the minimal time gap."""
    times = list(times)
    if len(times) != len(observables):
        raise ValueError("one time per observable")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    eig = eig if eig is not None else eigh_blocked(h)
    inv = float(np.linalg.norm(commutator(rho, h), 2))
    evolved = [heisenberg_evolve(a, h, t, eig) for a, t in zip(observables, times)]
    prod = 1.0 + 0j
    for a in observables:
        prod *= expect(rho, a)
    gap = min((b - a for a, b in zip(times, times[1:])), default=float("inf"))
    return TimeClusterResult(abs(expect(rho, *evolved) - prod), gap, inv <= 1e-10, inv)


def time_multicluster_curve(rho, a, gaps, h, eig=None):
    """Two-point defect ``|w(A alpha_T(A)) - w(A)^2|`` against the gap ``T``."""
    eig = eig if eig is not None else eigh_blocked(h)
    wa = expect(rho, a)
    out = []
    for T in gaps:
        at = heisenberg_evolve(a, h, T, eig) if T else a
        out.append((float(T), abs(expect(rho, a, at) - wa * wa)))
    return out


def recurrence_time(curve, start_fraction=0.5):
    """First gap after the initial decay where the defect climbs back above ``start_fraction`` of its T=0 value."""
    vals = [v for _, v in curve]
    v0 = vals[0]
    dipped = False
    for (t, v) in curve[1:]:
        if v < start_fraction * v0:
            dipped = True
        elif dipped:
            return t
    return None


# ---------------------------------------------------------------------------
# Lieb-Robinson


def lr_commutator(a, b, x, t, h, lattice, eig=None) -> float:
    """``||[sigma_x(alpha_t(A)), B]||`` (largest singular value)."""
    if x > lattice.sites / 2:
        raise ValueError("x must not exceed half the lattice")
    at = heisenberg_evolve(a, h, t, eig) if t else a
    c = commutator(translate(at, lattice, x) if x else at, b)
    if is_hermitian(a) and is_hermitian(b):
        # i[A', B] is Hermitian: its norm is the largest |eigenvalue|
        ev = np.linalg.eigvalsh(1j * c)
        return float(max(abs(ev[0]), abs(ev[-1])))
    return float(np.linalg.norm(c, 2))


def lr_sweep(a, b, h, lattice, xs, ts, eig=None):
    eig = eig if eig is not None else eigh_blocked(h)
    out = []
    for t in ts:
        at = heisenberg_evolve(a, h, t, eig) if t else a
        for x in xs:
            out.append(CorrelatorSample(lr_commutator(at, b, x, 0, h, lattice), j=float(x), t=float(t)))
    return out


@dataclass
class ConeFit:
    mu: float
    c: float
    prefactor: float
    goodness: float
    violation_fraction: float
    adjusted_prefactor: float
    adjusted_violation_fraction: float
    points: int
    flags: list = field(default_factory=list)

    @property
    def velocity(self):
        return self.c / self.mu if self.mu > 0 else float("inf")

    def exponent(self, x, t):
        return -self.mu * np.abs(x) + self.c * np.abs(t)


def _xtv(samples):
    return np.array([[s.j, s.t, s.value] if isinstance(s, CorrelatorSample) else s for s in samples], dtype=float)


def fit_lr_cone(samples, norm_a=1.0, norm_b=1.0, floor=LR_FLOOR) -> ConeFit:
    """Plane fit ``log(v / (|A||B|)) = log K - mu |x| + c |t|``.

    The fitted bound is violated by roughly half the samples by
    construction; ``adjusted_prefactor`` is the smallest ``K`` for which no
    sample violates ``K exp(-mu|x| + c|t|)``.
    """
    arr = _xtv(samples)
    x, t, v = np.abs(arr[:, 0]), np.abs(arr[:, 1]), arr[:, 2] / (norm_a * norm_b)
    keep = v > floor
    if not np.any(keep):
        return ConeFit(float("nan"), float("nan"), float("nan"), float("nan"), 0.0, float("nan"), 0.0, 0,
                       ["mu-indeterminate"])
    x, t, v = x[keep], t[keep], v[keep]
    if len(v) < 8 or len(np.unique(x)) < 3 or len(np.unique(t)) < 3:
        raise FitError("need >= 8 samples over >= 3 distinct x and >= 3 distinct t")
    y = np.log(v)
    a = np.column_stack([np.ones_like(x), -x, t])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    logk, mu, c = coef
    pred = a @ coef
    viol = float(np.mean(y > pred + 1e-12))
    adj = float(np.max(y - (pred - logk)))
    adj_viol = float(np.mean(y > adj + (pred - logk) + 1e-12))
    flags = [] if mu > 0 else ["non-positive-mu"]
    return ConeFit(float(mu), float(c), float(math.exp(logk)), _r2(y, pred), viol, float(math.exp(adj)),
                   adj_viol, len(v), flags)


def cone_violations(samples, fit: ConeFit, norm_a=1.0, norm_b=1.0, margin=3.0):
    """Samples with ``x > (c/mu) t + margin/mu`` whose value exceeds ``e^{-margin} |A||B|``."""
    arr = _xtv(samples)
    if not fit.mu > 0:
        raise ValueError("cone undefined for non-positive mu")
    out = []
    for x, t, v in arr:
        if abs(x) > (fit.c / fit.mu) * abs(t) + margin / fit.mu and v > math.exp(-margin) * norm_a * norm_b:
            out.append((float(x), float(t), float(v)))
    return out


__all__ = [
    "ConeFit", "CorrelatorSample", "DecayFit", "FitError", "TimeClusterResult", "cone_violations",
    "connected_correlator", "connected_correlator_complex", "fit_decay", "fit_lr_cone", "lr_commutator",
    "lr_sweep", "multi_cluster_defect", "recurrence_time", "time_multicluster_curve",
    "time_multicluster_defect",
]
