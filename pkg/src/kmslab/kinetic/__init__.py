"""Kinetic equation for the momentum occupation of a lattice Fermi gas."""

from .collision import collision_invariants, collision_operator, collision_reference, entropy_production
from .equilibrium import (
    BetaMu,
    DomainError,
    FermiDiracFit,
    attainable_energy,
    check_occupation,
    conserved_charges,
    entropy_density,
    fermi_dirac,
    fit_fermi_dirac,
    solve_beta_mu,
)
from .grid import (
    DISPERSIONS,
    CollisionKernel,
    MomentumGrid,
    cosine_dispersion,
    make_dispersion,
    quadratic_dispersion,
)
from .integrate import CHECKPOINT_FIELDS, KineticState, StepSizeError, Trajectory, evolve_to_stationary, step

__all__ = [
    "BetaMu", "CHECKPOINT_FIELDS", "CollisionKernel", "DISPERSIONS", "DomainError", "FermiDiracFit",
    "KineticState", "MomentumGrid", "StepSizeError", "Trajectory", "attainable_energy",
    "check_occupation", "collision_invariants", "collision_operator", "collision_reference",
    "conserved_charges", "cosine_dispersion", "entropy_density", "entropy_production",
    "evolve_to_stationary", "fermi_dirac", "fit_fermi_dirac", "make_dispersion",
    "quadratic_dispersion", "solve_beta_mu", "step",
]
