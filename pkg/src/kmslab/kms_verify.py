"""Modular-theoretic KMS checks in finite dimensions.

Conventions (enforced by the tests):

* GNS vector ``Omega = rho^{1/2}``, pairing ``<X, Y> = Tr(X* Y)``, the algebra
  acting by left multiplication.
* Modular operator ``Delta X = rho X rho^{-1}``; on ``|i><j|`` (eigenvectors
  of rho) its eigenvalue is ``r_i / r_j``.
* Bohr frequency ``mu_ij = E_i - E_j`` and modular exponent
  ``lambda_ij = log(r_j / r_i)``, so a Gibbs state at inverse temperature
  ``beta`` puts every pair on the line ``lambda = beta mu``.
* Time evolution ``alpha_t(B) = e^{iHt} B e^{-iHt}``, hence
  ``alpha_{i beta}(B) = e^{-beta H} B e^{beta H}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .operator_core import commutator, dagger, eigh_blocked, op_norm

FAITHFUL_FLOOR = 1e-12
REGULARIZATION = 1e-10


class NotFaithfulError(ValueError):
    pass


class NotInvariantError(ValueError):
    """The state does not commute with the Hamiltonian."""


@dataclass(frozen=True, eq=False)
class ModularData:
    rho: np.ndarray
    r: np.ndarray
    vecs: np.ndarray
    omega: np.ndarray
    regularized: bool = False

    @property
    def dim(self):
        return self.rho.shape[0]

    def delta(self, x):
        """``rho X rho^{-1}`` via the eigenbasis of rho."""
        v = self.vecs
        xe = dagger(v) @ x @ v
        return v @ (xe * (self.r[:, None] / self.r[None, :])) @ dagger(v)

    def modular_flow(self, x, t):
        """``Delta^{it} X = rho^{it} X rho^{-it}``."""
        v = self.vecs
        ph = np.exp(1j * t * np.log(self.r))
        return v @ ((dagger(v) @ x @ v) * (ph[:, None] / ph[None, :])) @ dagger(v)

    def delta_matrix(self):
        """Superoperator of Delta on row-major vectorized operators (4^N x 4^N)."""
        rho_inv = (self.vecs / self.r) @ dagger(self.vecs)
        return np.kron(self.rho, rho_inv.T)

    def state(self, a):
        """``<Omega, A Omega>``, which equals ``Tr(rho A)``."""
        return complex(np.vdot(self.omega, a @ self.omega))


def gns_embed(rho, regularize=False, verify=None, rng=None):
    """``(Omega, ModularData)`` for a faithful density matrix.

    With ``regularize=True`` a state below the faithfulness floor is replaced
    by ``(1 - delta) rho + delta I/d`` (``delta = 1e-10``) and the returned
    data carries ``regularized=True``; otherwise it is an error.
    """
    rho = np.asarray(rho)
    d = rho.shape[0]
    rho = 0.5 * (rho + dagger(rho))
    r, v = np.linalg.eigh(rho)
    flagged = False
    if r.min() <= FAITHFUL_FLOOR:
        if not regularize:
            raise NotFaithfulError(f"minimum eigenvalue {r.min():.3e} below the faithfulness floor")
        rho = (1 - REGULARIZATION) * rho + REGULARIZATION * np.eye(d) / d
        r = (1 - REGULARIZATION) * r + REGULARIZATION / d
        flagged = True
    omega = (v * np.sqrt(r)) @ dagger(v)
    md = ModularData(rho, r, v, omega, flagged)
    if verify is None:
        verify = d <= 256
    if verify:
        _verify(md, rng)
    return omega, md


def _verify(md, rng=None, count=20, tol=1e-12):
    rng = np.random.default_rng(0) if rng is None else rng
    d = md.dim
    if abs(np.vdot(md.omega, md.omega) - 1) > 1e-10:
        raise AssertionError("Omega is not normalized")
    if np.max(np.abs(md.delta(md.omega) - md.omega)) > tol * 10:
        raise AssertionError("Delta Omega != Omega")
    for _ in range(count):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if abs(md.state(a) - np.sum(md.rho * a.T)) > 1e-10 * max(1.0, np.abs(a).max()):
            raise AssertionError("GNS vector does not reproduce the state")


@dataclass
class InvarianceResidual:
    residual: float
    dual: float
    vector: np.ndarray = field(repr=False, default=None)


def invariance_residual(rho, w, md=None) -> InvarianceResidual:
    """``|| W*W* Omega + Delta(W W Omega) + W* Delta(W Omega) ||`` and its dual.

    The dual value is ``max_ab |<Omega, (W W E_ab + E_ab W*W* - 2 W E_ab W*) Omega>|``
    over matrix units, i.e. ``max |rho W W + W*W* rho - 2 W* rho W|``.
    """
    w = np.asarray(w.matrix if hasattr(w, "matrix") else w)
    if md is None:
        omega, md = gns_embed(rho)
    else:
        omega = md.omega
    if w.shape != md.rho.shape:
        raise ValueError("W and rho have different dimensions")
    wd = dagger(w)
    v = wd @ wd @ omega + md.delta(w @ w @ omega) + wd @ md.delta(w @ omega)
    r = md.rho
    m = r @ w @ w + wd @ wd @ r - 2.0 * wd @ r @ w
    return InvarianceResidual(float(np.linalg.norm(v)), float(np.abs(m).max()), v)


# ---------------------------------------------------------------------------
# Joint spectrum


def joint_eigenbasis(rho, h, tol=1e-10, eig=None):
    """Common eigenbasis of commuting ``rho`` and ``H``: ``(E, r, vecs)``.

    Raises ``NotInvariantError`` when ``||[rho, H]|| > tol * ||H||``.
    """
    rho = np.asarray(rho)
    h = np.asarray(h)
    scale = max(op_norm(h), 1.0)
    if op_norm(commutator(rho, h)) > tol * scale:
        raise NotInvariantError("state is not invariant: [rho, H] != 0")
    e, v = eig if eig is not None else eigh_blocked(h)
    r = np.empty_like(e)
    vecs = v.copy()
    gap_tol = 1e-9 * scale
    start = 0
    n = len(e)
    while start < n:
        stop = start + 1
        while stop < n and e[stop] - e[stop - 1] <= gap_tol:
            stop += 1
        sub = v[:, start:stop]
        rr, u = np.linalg.eigh(dagger(sub) @ rho @ sub)
        r[start:stop] = rr
        vecs[:, start:stop] = sub @ u
        e[start:stop] = e[start:stop].mean()
        start = stop
    return e, r, vecs


@dataclass
class JointSpectrumPoint:
    mu: float
    lam: float
    weight: float


@dataclass
class LineTest:
    beta: float
    line_residual: float
    points: list
    flags: list = field(default_factory=list)

    def __iter__(self):
        yield self.beta
        yield self.line_residual
        yield self.points


def kms_line_test(rho, h, probe, weight_floor=1e-14, eig=None) -> LineTest:
    """Fit ``lambda = beta mu`` through the origin over the joint spectrum seen by ``probe``.

    Pairs ``(i, j)`` of joint eigenvectors carry weight ``|<i|probe|j>|^2``;
    the line residual is the maximum of ``|lambda - beta mu|`` over pairs with
    weight above ``weight_floor``.
    """
    e, r, vecs = joint_eigenbasis(rho, h, eig=eig)
    if r.min() <= FAITHFUL_FLOOR:
        raise NotFaithfulError(f"minimum eigenvalue {r.min():.3e} below the faithfulness floor")
    amp = dagger(vecs) @ np.asarray(probe) @ vecs
    wt = np.abs(amp) ** 2
    ii, jj = np.nonzero(wt > weight_floor)
    mu = e[ii] - e[jj]
    logr = np.log(r)
    lam = logr[jj] - logr[ii]
    wsel = wt[ii, jj]
    flags = []
    denom = np.sum(wsel * mu * mu)
    scale = max(np.abs(e).max(initial=0.0), 1.0)
    if len(mu) == 0 or np.max(np.abs(mu), initial=0.0) <= 1e-12 * scale:
        flags.append("beta-indeterminate")
        beta = 0.0
    else:
        beta = float(np.sum(wsel * lam * mu) / denom)
    resid = float(np.max(np.abs(lam - beta * mu), initial=0.0))
    points = [JointSpectrumPoint(float(a), float(b), float(c)) for a, b, c in zip(mu, lam, wsel)]
    return LineTest(beta, resid, points, flags)


def fit_beta(rho, h, eig=None):
    """Least squares ``-log r_i = beta E_i + c`` over eigenspaces of ``H``; returns ``(beta, affine_residual)``.

    Within a degenerate eigenspace ``-log r`` is averaged before fitting; the
    residual is the largest deviation of any individual eigenvalue.
    """
    e, r, _ = joint_eigenbasis(rho, h, eig=eig)
    if r.min() <= FAITHFUL_FLOOR:
        raise NotFaithfulError(f"minimum eigenvalue {r.min():.3e} below the faithfulness floor")
    y = -np.log(r)
    levels, inv = np.unique(e, return_inverse=True)
    ybar = np.bincount(inv, weights=y) / np.bincount(inv)
    if len(levels) == 1:
        return 0.0, float(np.max(np.abs(y - y.mean())))
    a = np.column_stack([levels, np.ones_like(levels)])
    (beta, c), *_ = np.linalg.lstsq(a, ybar, rcond=None)
    return float(beta), float(np.max(np.abs(beta * e + c - y)))


def kms_two_point_check(rho, h, a, b, beta, relative=False, eig=None) -> complex:
    """``Tr(rho A e^{-beta H} B e^{beta H}) - Tr(rho B A)``.

    Evaluated in the eigenbasis of ``H`` with the exponentials folded into a
    log-sum-exp, so large ``beta * spread(H)`` only fails when the result
    itself overflows.  ``relative=True`` divides by the trace norm of
    ``rho B A``.  Accuracy is limited by the relative accuracy of the
    smallest eigenvalues of ``rho``, which a dense matrix only carries to
    about ``1e-16`` absolute.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    rho, h, a, b = (np.asarray(x) for x in (rho, h, a, b))
    # joint eigenbasis: rho = sum r_j |j><j|, and log r_j is folded into the
    # exponent so e^{-beta E_i} r_j e^{beta E_j} never loses digits to cancellation
    e, r, v = joint_eigenbasis(rho, h, eig=eig)
    r = np.clip(r, 0.0, None)
    ae = dagger(v) @ a @ v
    be = dagger(v) @ b @ v
    # sum_ij r_j A_ji B_ij exp(-beta (E_i - E_j))
    terms = ae.T * be
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    expo = logr[None, :] - beta * (e[:, None] - e[None, :])
    mask = (terms != 0) & (r[None, :] > 0)
    if not np.any(mask):
        lhs = 0j
    else:
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(terms[mask])) + expo[mask]
        phases = np.exp(1j * np.angle(terms[mask]))
        mx = logs.max()
        if mx > 700:
            # rescale; only fails when the sum itself is out of range
            re = logsumexp(logs, b=phases.real, return_sign=True)
            im = logsumexp(logs, b=phases.imag, return_sign=True)
            if max(re[0], im[0]) > 709:
                raise OverflowError("KMS two-point value exceeds floating-point range")
            lhs = re[1] * np.exp(re[0]) + 1j * im[1] * np.exp(im[0])
        else:
            lhs = complex(np.sum(phases * np.exp(logs)))
    rhs = complex(np.sum(r * np.diag(be @ ae)))
    res = lhs - rhs
    if relative:
        tn = float(np.sum(np.linalg.svd(rho @ b @ a, compute_uv=False)))
        res = res / max(tn, 1e-300)
    return res


__all__ = [
    "FAITHFUL_FLOOR", "InvarianceResidual", "JointSpectrumPoint", "LineTest", "ModularData",
    "NotFaithfulError", "NotInvariantError", "REGULARIZATION", "fit_beta", "gns_embed",
    "invariance_residual", "joint_eigenbasis", "kms_line_test", "kms_two_point_check",
]
