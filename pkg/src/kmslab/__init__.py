"""Finite-size numerical laboratory for lattice-fermion kinetics, Lindblad flows and KMS states."""

__version__ = "0.1.0"
