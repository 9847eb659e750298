"""Finite-dimensional Lindblad engine.

The generator in ``eq12-literal`` form is

    L(rho) = -i[H0, rho] - W W rho - rho W* W* + 2 W* rho W

which preserves the trace only for self-adjoint ``W`` (it then coincides with
the standard GKSL dissipator for the jump ``sqrt(2) W``).  ``standard-gksl``
uses ``L rho L* - {L* L, rho}/2`` for arbitrary jumps.  Several jumps may be
combined; their dissipators add.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .operator_core import (
    dagger,
    eigh_blocked,
    gibbs_state,
    is_hermitian,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

EXACT_MAX_SITES = 6
EIG_FLOOR = -1e-10
# overall constant between the Pauli rate sum and dS/dtau under the eq12-literal flow
ENTROPY_FACTOR = 2.0


class SelfAdjointnessError(ValueError):
    """The eq12-literal generator was given a non-self-adjoint jump."""


class SingularRateWarning(RuntimeWarning):
    """A positive rate feeds a zero eigenvalue, so dS/dtau is +inf."""


@dataclass(frozen=True, eq=False)
class JumpOperator:
    matrix: np.ndarray
    provenance: str = "user-supplied"
    epsilon: float | None = None
    selfadjoint: bool | None = None

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=complex)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("jump operator must be a square matrix")
        if not np.all(np.isfinite(w)):
            raise ValueError("jump operator has non-finite entries")
        object.__setattr__(self, "matrix", w)
        sa = is_hermitian(w, 1e-12 * max(1.0, np.abs(w).max()))
        if self.selfadjoint is None:
            object.__setattr__(self, "selfadjoint", sa)
        elif self.selfadjoint and not sa:
            raise SelfAdjointnessError("jump flagged self-adjoint but ||W - W*|| exceeds 1e-12")

    @property
    def dim(self):
        return self.matrix.shape[0]


def _as_jump(w):
    return w if isinstance(w, JumpOperator) else JumpOperator(w)


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    jumps: Sequence[JumpOperator]
    form: str = "eq12-literal"
    h0: np.ndarray | None = None

    def __post_init__(self):
        jumps = self.jumps
        if isinstance(jumps, (JumpOperator, np.ndarray)):
            jumps = [jumps]
        jumps = tuple(_as_jump(w) for w in jumps)
        if not jumps:
            raise ValueError("at least one jump operator is required")
        dims = {j.dim for j in jumps}
        if len(dims) != 1:
            raise ValueError("jump operators have different dimensions")
        object.__setattr__(self, "jumps", jumps)
        if self.form not in ("eq12-literal", "standard-gksl"):
            raise ValueError(f"unknown generator form {self.form!r}")
        if self.form == "eq12-literal" and not all(j.selfadjoint for j in jumps):
            raise SelfAdjointnessError(
                "eq12-literal form preserves the trace only for self-adjoint W; use standard-gksl"
            )
        if self.h0 is not None:
            h0 = np.asarray(self.h0)
            if h0.shape != (self.dim, self.dim) or not is_hermitian(h0):
                raise ValueError("H0 must be Hermitian with the jump dimension")

    @property
    def dim(self):
        return self.jumps[0].dim

    @property
    def jump(self):
        return self.jumps[0]

    @property
    def is_dephasing(self):
        """Single self-adjoint jump and no Hamiltonian part: solvable in the eigenbasis of W."""
        return len(self.jumps) == 1 and self.jumps[0].selfadjoint and self.h0 is None


def build_W(h_pert, h0, epsilon, gap_sign=1, eig=None) -> JumpOperator:
    """Regularized time integral ``int_0^inf e^{-eps t} e^{iH0 t} H' e^{-iH0 t} dt``.

    In the eigenbasis of ``H0``: ``W_jk = H'_jk / (eps - i mu_jk)`` with
    ``mu_jk = E_j - E_k``; ``gap_sign=-1`` flips the sign of ``mu`` for
    sensitivity checks.  The integrand is Hermitian for every ``t`` and the
    weight is real, so the result is self-adjoint; as ``eps -> 0`` the
    elements with ``mu_jk = 0`` grow like ``1/eps`` while the others tend to
    ``i H'_jk / mu_jk``.
    """
    if not epsilon > 0:
        raise ValueError("regularization epsilon must be positive")
    if gap_sign not in (1, -1):
        raise ValueError("gap_sign must be +1 or -1")
    if not (is_hermitian(h_pert) and is_hermitian(h0)):
        raise ValueError("H' and H0 must be Hermitian")
    e, v = eig if eig is not None else eigh_blocked(h0)
    hp = dagger(v) @ h_pert @ v
    mu = e[:, None] - e[None, :]
    w = v @ (hp / (epsilon - 1j * gap_sign * mu)) @ dagger(v)
    return JumpOperator(w, provenance="built-from-H'", epsilon=float(epsilon))


def _dissipator(rho, w, form):
    wd = dagger(w)
    if form == "eq12-literal":
        return -w @ w @ rho - rho @ wd @ wd + 2.0 * wd @ rho @ w
    wdw = wd @ w
    return w @ rho @ wd - 0.5 * (wdw @ rho + rho @ wdw)


def lindblad_rhs(rho, gen: LindbladGenerator):
    out = np.zeros(rho.shape, dtype=complex)
    if gen.h0 is not None:
        out += -1j * (gen.h0 @ rho - rho @ gen.h0)
    for j in gen.jumps:
        out += _dissipator(rho, j.matrix, gen.form)
    return out


def superoperator(gen: LindbladGenerator):
    """Matrix of the generator on row-major vectorized operators, ``vec(A X B) = (A kron B^T) vec(X)``."""
    d = gen.dim
    if d > 2**EXACT_MAX_SITES:
        raise ValueError(f"superoperator limited to N <= {EXACT_MAX_SITES}")
    eye = np.eye(d)
    sup = np.zeros((d * d, d * d), dtype=complex)
    if gen.h0 is not None:
        sup += -1j * (np.kron(gen.h0, eye) - np.kron(eye, gen.h0.T))
    for j in gen.jumps:
        w = j.matrix
        wd = dagger(w)
        if gen.form == "eq12-literal":
            sup += -np.kron(w @ w, eye) - np.kron(eye, (wd @ wd).T) + 2.0 * np.kron(wd, w.T)
        else:
            wdw = wd @ w
            sup += np.kron(w, wd.T) - 0.5 * (np.kron(wdw, eye) + np.kron(eye, wdw.T))
    return sup


def _finalize(rho):
    rho = 0.5 * (rho + dagger(rho))
    lo = np.linalg.eigvalsh(rho).min()
    if lo < EIG_FLOOR:
        warnings.warn(f"evolved state has eigenvalue {lo:.3e}; projecting to a valid state", RuntimeWarning)
        w, v = np.linalg.eigh(rho)
        w = np.clip(w, 0.0, None)
        rho = (v * (w / w.sum())) @ dagger(v)
    return rho


def _rk4(rho, gen, tau, dtau):
    nsteps = max(1, int(math.ceil(tau / dtau - 1e-9)))
    h = tau / nsteps
    for _ in range(nsteps):
        k1 = lindblad_rhs(rho, gen)
        k2 = lindblad_rhs(rho + 0.5 * h * k1, gen)
        k3 = lindblad_rhs(rho + 0.5 * h * k2, gen)
        k4 = lindblad_rhs(rho + h * k3, gen)
        rho = rho + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _dephasing_factor(gen):
    w, v = np.linalg.eigh(gen.jump.matrix)
    scale = 2.0 if gen.form == "eq12-literal" else 1.0
    # L(rho)_ab = -(scale/2) (w_a - w_b)^2 rho_ab in the eigenbasis of W
    return v, -0.5 * scale * (w[:, None] - w[None, :]) ** 2


def evolve(rho0, gen: LindbladGenerator, tau, method="exact-exponential", dtau=1e-3):
    """``rho(tau)`` under ``gen``.

    ``method``: ``exact-exponential`` (dense superoperator exponential,
    N <= 6), ``rk4`` (fixed step ``dtau``) or ``dephasing`` (closed form for
    a single self-adjoint jump without Hamiltonian part).
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if tau == 0:
        return rho0.copy()
    if method == "exact-exponential":
        d = gen.dim
        prop = expm(tau * superoperator(gen))
        rho = (prop @ rho0.reshape(-1)).reshape(d, d)
    elif method == "rk4":
        rho = _rk4(rho0, gen, tau, dtau)
    elif method == "dephasing":
        if not gen.is_dephasing:
            raise ValueError("dephasing method needs one self-adjoint jump and no H0")
        v, rate = _dephasing_factor(gen)
        rho = v @ ((dagger(v) @ rho0 @ v) * np.exp(tau * rate)) @ dagger(v)
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    return _finalize(rho)


def evolution_trace(rho0, gen, taus, method="exact-exponential", dtau=1e-3, reference=None):
    """Rows ``(tau, S, trace defect, min eigenvalue, distance to nearest Gibbs state of reference)``."""
    rows = []
    rho, t_prev = np.asarray(rho0, dtype=complex), 0.0
    eig = eigh_blocked(reference) if reference is not None else None
    for t in taus:
        rho = evolve(rho, gen, t - t_prev, method, dtau) if t > t_prev else rho
        t_prev = t
        ev = np.linalg.eigvalsh(rho)
        dist = nearest_gibbs_distance(rho, reference, eig)[1] if reference is not None else float("nan")
        rows.append(dict(tau=float(t), entropy=von_neumann_entropy(rho), trace_defect=abs(np.trace(rho) - 1),
                         min_eigenvalue=float(ev.min()), gibbs_distance=dist))
    return rows


def nearest_gibbs_distance(rho, h, eig=None, beta_max=50.0):
    """``(beta, min_beta ||rho - Gibbs(h, beta)||_1)`` over ``0 <= beta <= beta_max``."""
    from scipy.optimize import minimize_scalar

    eig = eig if eig is not None else eigh_blocked(h)

    def dist(b):
        return float(np.abs(np.linalg.eigvalsh(rho - gibbs_state(h, b, eig))).sum())

    res = minimize_scalar(dist, bounds=(0.0, beta_max), method="bounded", options={"xatol": 1e-8})
    return float(res.x), float(res.fun)


# ---------------------------------------------------------------------------
# Pauli rates and entropy


@dataclass(frozen=True, eq=False)
class RateMatrix:
    T: np.ndarray
    basis: np.ndarray
    doubly_balanced: bool


def pauli_rates(w, basis=None, tol=1e-12) -> RateMatrix:
    """``T_jk = |<j|W|k>|^2`` in the orthonormal columns of ``basis`` (default: computational)."""
    w = w.matrix if isinstance(w, JumpOperator) else np.asarray(w)
    basis = np.eye(w.shape[0]) if basis is None else np.asarray(basis)
    if not np.allclose(dagger(basis) @ basis, np.eye(basis.shape[1]), atol=1e-10):
        raise ValueError("basis is not orthonormal")
    amp = dagger(basis) @ w @ basis
    a = np.abs(amp)
    balanced = bool(np.max(np.abs(a - a.T), initial=0.0) <= tol * max(1.0, a.max(initial=0.0)))
    return RateMatrix(a**2, basis, balanced)


def entropy_derivative(r, rates, factor=ENTROPY_FACTOR) -> float:
    """``factor * sum_jk (T_kj r_j log r_j - T_jk r_j log r_k)``.

    ``factor = 2`` is the normalization under which this equals ``dS/dtau``
    of the eq12-literal flow in the diagonal-preserving case.  Zero
    probabilities use ``0 log 0 = 0``; a positive rate from an occupied
    level into an empty one gives ``+inf`` with a warning.
    """
    t = rates.T if isinstance(rates, RateMatrix) else np.asarray(rates, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or abs(r.sum() - 1) > 1e-10:
        raise ValueError("r must be a probability vector")
    pos = r > 0
    logr = np.where(pos, np.log(np.where(pos, r, 1.0)), -np.inf)
    rlogr = np.where(pos, r * np.where(pos, logr, 0.0), 0.0)
    first = float(np.sum(t.sum(axis=0) * rlogr))
    mask = (t > 0) & pos[:, None] & ~pos[None, :]
    if np.any(mask):
        warnings.warn("rate into a zero eigenvalue: entropy derivative is +inf", SingularRateWarning)
        return float("inf")
    finite_log = np.where(pos, logr, 0.0)
    second = float(np.sum(t * r[:, None] * finite_log[None, :]))
    return factor * (first - second)


def pauli_flow(r, rates, factor=ENTROPY_FACTOR):
    """Diagonal part of the eq12-literal flow: ``dr_j = factor sum_k (T_jk r_k - T_kj r_j)``."""
    t = rates.T if isinstance(rates, RateMatrix) else np.asarray(rates, dtype=float)
    return factor * (t @ r - t.sum(axis=0) * r)


# ---------------------------------------------------------------------------
# Stationary states


@dataclass
class StationaryStates:
    states: list
    dimension: int
    valid: list = field(default_factory=list)
    degenerate: bool = False
    everything: bool = False
    basis: list = field(default_factory=list)


def stationary_states(gen: LindbladGenerator, rel_tol=1e-10) -> StationaryStates:
    """Kernel of the superoperator via singular-value thresholding at ``rel_tol * s_max``.

    The kernel is returned as a Hermitian orthonormal basis (``basis``) and as
    density matrices (``states``): each basis element is normalized to unit
    trace when possible and projected onto the positive cone; ``valid``
    records whether the projection was unnecessary.
    """
    d = gen.dim
    sup = superoperator(gen)
    _, s, vh = np.linalg.svd(sup)
    smax = s[0] if s[0] > 0 else 1.0
    null = vh[s <= rel_tol * smax].conj()
    if s[0] == 0:
        null = np.eye(d * d, dtype=complex)
    herm = []
    for vec in null:
        x = vec.reshape(d, d)
        herm.append(0.5 * (x + dagger(x)))
        herm.append(0.5j * (x - dagger(x)))
    if herm:
        stack = np.array([h.reshape(-1) for h in herm])
        u, sv, vh2 = np.linalg.svd(stack, full_matrices=False)
        rank = int(np.sum(sv > 1e-8 * sv[0])) if sv.size and sv[0] > 0 else 0
        basis = [vh2[i].reshape(d, d) for i in range(rank)]
        # the kernel of a Hermiticity-preserving map is spanned by Hermitian elements; fix phases
        basis = [_hermitian_phase(b) for b in basis]
    else:
        basis = []
    states, valid = [], []
    for b in basis:
        tr = np.trace(b).real
        x = b / tr if abs(tr) > 1e-10 else b
        w, v = np.linalg.eigh(x)
        ok = abs(tr) > 1e-10 and w.min() >= -1e-10
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            continue
        states.append((v * (w / w.sum())) @ dagger(v))
        valid.append(bool(ok))
    dim = len(basis)
    return StationaryStates(states, dim, valid, dim > 1, dim == d * d, basis)


def _hermitian_phase(b):
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if k[0] == k[1]:
        b = b * np.exp(-1j * np.angle(b[k]))
    else:
        ph = np.angle(b[k] * b[k[1], k[0]])
        b = b * np.exp(-0.5j * ph)
    h = 0.5 * (b + dagger(b))
    return h / np.linalg.norm(h)


# ---------------------------------------------------------------------------
# Localized entropy experiment


def _parity(n):
    idx = np.arange(2**n)
    return np.array([bin(i).count("1") % 2 for i in idx])


def partial_trace_block(rho, n_sites, start, size):
    """Fermionic restriction of a parity-even state to sites ``start .. start+size-1``.

    For an even state the restriction equals the even part of the qubit
    partial trace; odd components are projected out.
    """
    left, right = start, n_sites - start - size
    r = rho.reshape([2**left, 2**size, 2**right] * 2)
    red = np.einsum("aibajb->ij", r)
    par = _parity(size)
    return red * (par[:, None] == par[None, :])


def restrict_operator(w, n_sites, start, size):
    """Tracial conditional expectation of an even operator onto the block (normalized partial trace)."""
    env = 2 ** (n_sites - size)
    return partial_trace_block(w, n_sites, start, size) / env


def _is_parity_even(rho, n):
    par = _parity(n)
    return np.max(np.abs(rho[par[:, None] != par[None, :]]), initial=0.0) <= 1e-12


@dataclass
class LocalEntropyReport:
    taus: np.ndarray
    entropy_global: np.ndarray
    entropy_local: np.ndarray
    difference: np.ndarray
    region_size: int
    boundary_size: int


def localized_entropy_experiment(omega, lattice, region, jump, taus) -> LocalEntropyReport:
    """Compare (a) the restriction to ``region`` of the globally evolved state with
    (b) the restricted initial state evolved by the localized jump ``W_X``.

    ``region`` is a contiguous ``range`` of sites on a chain.  Both flows
    use the eq12-literal dephasing generator of a self-adjoint jump.
    """
    n = lattice.sites
    sites = list(region)
    if lattice.geometry != "chain":
        raise ValueError("localized entropy experiment is defined on chains")
    if not sites or sites != list(range(sites[0], sites[0] + len(sites))) or sites[-1] >= n:
        raise ValueError("region must be a non-empty contiguous block of sites")
    if n > 10 or len(sites) > 6:
        raise ValueError("need N <= 10 and |X| <= 6")
    omega = np.asarray(omega, dtype=complex)
    if not _is_parity_even(omega, n):
        raise ValueError("state must be parity-even for a fermionic restriction")
    start, size = sites[0], len(sites)
    jump = _as_jump(jump)
    gen = LindbladGenerator(jump)
    w_x = restrict_operator(jump.matrix, n, start, size)
    local_gen = LindbladGenerator(JumpOperator(0.5 * (w_x + dagger(w_x))))
    rho_x0 = partial_trace_block(omega, n, start, size)
    taus = np.asarray(taus, dtype=float)
    sa, sb = [], []
    for t in taus:
        sa.append(von_neumann_entropy(partial_trace_block(evolve(omega, gen, t, "dephasing"), n, start, size)))
        sb.append(von_neumann_entropy(evolve(rho_x0, local_gen, t, "dephasing")))
    sa, sb = np.array(sa), np.array(sb)
    if size == n:
        boundary = 0
    else:
        inside = set(sites)
        boundary = sum((i in inside) != (j in inside) for i, j in lattice.bonds())
    return LocalEntropyReport(taus, sa, sb, sa - sb, size, boundary)


def random_jump(dim, rng, scale=1.0):
    """Random self-adjoint jump with GUE-distributed entries."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return JumpOperator(scale * 0.5 * (x + dagger(x)) / math.sqrt(dim))


__all__ = [
    "ENTROPY_FACTOR", "JumpOperator", "LindbladGenerator", "LocalEntropyReport", "RateMatrix",
    "SelfAdjointnessError", "SingularRateWarning", "StationaryStates", "build_W", "entropy_derivative",
    "evolution_trace", "evolve", "lindblad_rhs", "localized_entropy_experiment", "nearest_gibbs_distance",
    "partial_trace_block", "pauli_flow", "pauli_rates", "random_jump", "restrict_operator",
    "stationary_states", "superoperator",
]
