"""Commuting-derivation family ``gamma K + V / gamma`` and its defects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator_core import commutator, gibbs_state


def scaled_generator(k, v, gamma):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return gamma * k + v / gamma


def _norm2(a):
    return float(np.linalg.norm(a, 2))


@dataclass
class DerivationDefect:
    defect: float  # ||[[H1, H2], a]||
    defect_nested: float  # ||[H1, [H2, a]] - [H2, [H1, a]]||
    centrality: float  # min_c ||[H1, H2] - c I||


def centrality_defect(c):
    """``min_z ||C - z I||`` for anti-Hermitian ``C``: half the spread of the spectrum of ``iC``."""
    ev = np.linalg.eigvalsh(0.5j * (c - c.conj().T))
    return 0.5 * float(ev[-1] - ev[0])


def derivation_commutator_defect(h1, h2, a) -> DerivationDefect:
    """Operator norm of ``(delta_1 delta_2 - delta_2 delta_1)(a)`` with ``delta_k = i[H_k, .]``.

    Computed both as ``[[H1, H2], a]`` and as the nested difference; the two
    agree by the Jacobi identity.
    """
    c = commutator(h1, h2)
    direct = _norm2(commutator(c, a))
    nested = _norm2(commutator(h1, commutator(h2, a)) - commutator(h2, commutator(h1, a)))
    return DerivationDefect(direct, nested, centrality_defect(c))


def trace_norm(a):
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def invariant_state_family(k, v, gamma, beta):
    """``(Gibbs(gamma K + V/gamma, beta), ||[rho, K + V]||_1)``."""
    rho = gibbs_state(scaled_generator(k, v, gamma), beta)
    return rho, trace_norm(commutator(rho, k + v))


def defect_table(k, v, gammas, betas, probe):
    """Rows ``(gamma, beta, commutator defect, centrality defect, invariance defect)``."""
    h = k + v
    rows = []
    for g in gammas:
        d = derivation_commutator_defect(h, scaled_generator(k, v, g), probe)
        for b in betas:
            _, inv = invariant_state_family(k, v, g, b)
            rows.append(dict(gamma=float(g), beta=float(b), commutator_defect=d.defect,
                             centrality_defect=d.centrality, invariance_defect=inv))
    return rows


__all__ = ["DerivationDefect", "centrality_defect", "defect_table", "derivation_commutator_defect",
           "invariant_state_family", "scaled_generator", "trace_norm"]
