"""Collision operator, its brute-force oracle, and collision invariants."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .._kernels import get_backend


def collision_operator(rho, kernel, backend=None):
    """``d rho / d tau`` at every momentum.

    ``C[rho](p1) = sum W delta(p1+p2-p3-p4) D(e1+e2-e3-e4)
    [rho3 rho4 (1-rho1)(1-rho2) - rho1 rho2 (1-rho3)(1-rho4)]``.
    """
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    i1, i2, i3, i4, w = kernel.quadruples
    if len(w) == 0:
        return np.zeros_like(rho)
    return get_backend(backend).collision_sum(rho, i1, i2, i3, i4, w, kernel.bilinear)


def collision_reference(rho, kernel):
    """Quadruple loop over all ``(p2, p3, p4)`` for every ``p1``; slow, for small grids only.

    Momentum conservation and the shell factor are tested directly on the
    momentum vectors rather than through the cached table.
    """
    grid = kernel.grid
    if grid.size > 16:
        raise ValueError("reference loop is restricted to grids of at most 16 points")
    p = grid.momenta
    eps = kernel.dispersion
    n = grid.size
    out = np.zeros(n)
    for a in range(n):
        total = 0.0
        for b, c, d in itertools.product(range(n), repeat=3):
            dq = p[a] + p[b] - p[c] - p[d]
            # conserved modulo 2 pi on every axis
            if np.any(np.abs(np.remainder(dq + np.pi, 2 * np.pi) - np.pi) > 1e-9):
                continue
            de = eps[a] + eps[b] - eps[c] - eps[d]
            if kernel.mode == "exact-shell":
                if abs(de) > kernel.shell_tol:
                    continue
                shell = 1.0
            else:
                shell = math.exp(-0.5 * (de / kernel.eta) ** 2) / (kernel.eta * math.sqrt(2 * math.pi))
            if callable(kernel.vertex):
                vert = float(np.asarray(kernel.vertex(grid, *(np.array([i]) for i in (a, b, c, d))))[0])
            else:
                vert = float(kernel.vertex)
            r1, r2, r3, r4 = rho[a], rho[b], rho[c], rho[d]
            if kernel.bilinear:
                g = r3 * r4 - r1 * r2
            else:
                g = r3 * r4 * (1 - r1) * (1 - r2) - r1 * r2 * (1 - r3) * (1 - r4)
            total += vert * shell * g
        out[a] = total
    return out


def entropy_production(rho, kernel):
    """``dS/dtau = sum_p C[rho](p) log((1 - rho)/rho)``; non-negative for the UU form."""
    rho = np.asarray(rho, dtype=float)
    c = collision_operator(rho, kernel)
    with np.errstate(divide="ignore", invalid="ignore"):
        logit = np.log1p(-rho) - np.log(rho)
    logit = np.where(c == 0, 0.0, logit)
    return float(np.sum(c * logit))


def collision_invariants(kernel, tol=1e-8):
    """Orthonormal basis of functions ``phi`` with ``phi1 + phi2 = phi3 + phi4`` on the scattering set.

    Stationary occupations strictly inside ``(0, 1)`` are exactly
    ``1 / (1 + exp(phi))`` for ``phi`` in this span, so a dimension above 2
    means Fermi-Dirac is not the only attractor.
    """
    i1, i2, i3, i4, w = kernel.quadruples
    keep = w > 0
    n = kernel.grid.size
    rows = len(w[keep])
    if rows == 0:
        return np.eye(n)
    m = np.zeros((n, n))
    # Gram matrix of the constraint rows; its null space is the invariant space
    for sign_a, ia in ((1, i1), (1, i2), (-1, i3), (-1, i4)):
        for sign_b, ib in ((1, i1), (1, i2), (-1, i3), (-1, i4)):
            np.add.at(m, (ia[keep], ib[keep]), sign_a * sign_b)
    vals, vecs = np.linalg.eigh(m)
    return vecs[:, vals <= tol * max(vals.max(), 1.0)]
