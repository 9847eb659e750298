"""Momentum grids, dispersions and collision kernels."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .._kernels import get_backend

MAX_GRID_POINTS = 4096


@dataclass(frozen=True)
class MomentumGrid:
    """Discrete Brillouin zone: ``p = 2 pi k / L`` per axis, ``k = 0..L-1``, row-major."""

    side: int
    dimension: int = 2

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.side < 2:
            raise ValueError(f"side length must be >= 2, got {self.side}")
        if self.size > MAX_GRID_POINTS:
            raise ValueError(f"grid of {self.size} points exceeds {MAX_GRID_POINTS}")

    @property
    def size(self) -> int:
        return self.side**self.dimension

    @cached_property
    def integer_momenta(self) -> np.ndarray:
        axes = np.meshgrid(*[np.arange(self.side)] * self.dimension, indexing="ij")
        return np.ascontiguousarray(np.stack([a.ravel() for a in axes], axis=1), dtype=np.int64)

    @property
    def momenta(self) -> np.ndarray:
        return 2 * np.pi * self.integer_momenta / self.side

    @property
    def centered_momenta(self) -> np.ndarray:
        """Momenta folded into ``(-pi, pi]``."""
        k = self.integer_momenta
        k = np.where(k > self.side // 2, k - self.side, k)
        return 2 * np.pi * k / self.side

    def index(self, k) -> int:
        k = np.asarray(k) % self.side
        return int(np.ravel_multi_index(tuple(k), (self.side,) * self.dimension))


def cosine_dispersion(grid, hopping=1.0):
    """Nearest-neighbour band ``-2J sum_axis cos p_axis``."""
    return -2.0 * hopping * np.cos(grid.momenta).sum(axis=1)


def quadratic_dispersion(grid, hopping=1.0):
    """Folded parabolic band ``J |p|^2`` with ``p`` in ``(-pi, pi]``."""
    return hopping * (grid.centered_momenta**2).sum(axis=1)


DISPERSIONS = {"cosine": cosine_dispersion, "quadratic": quadratic_dispersion}


def make_dispersion(grid, kind="cosine", hopping=1.0):
    try:
        return DISPERSIONS[kind](grid, hopping)
    except KeyError:
        raise ValueError(f"unknown dispersion {kind!r}; choose from {sorted(DISPERSIONS)}") from None


@dataclass(frozen=True, eq=False)
class CollisionKernel:
    """Scattering data for the kinetic equation.

    ``vertex`` is either a non-negative constant or a callable
    ``vertex(grid, i1, i2, i3, i4) -> weights`` on index arrays; it must be
    symmetric under ``1<->2``, ``3<->4`` and ``(12)<->(34)``.  ``form``
    selects the Pauli-blocked gain-loss term (``"uehling-uhlenbeck"``) or its
    bilinear truncation (``"bilinear"``).
    """

    grid: MomentumGrid
    dispersion: np.ndarray = None
    vertex: object = 1.0
    mode: str = "exact-shell"
    eta: float = 0.1
    form: str = "uehling-uhlenbeck"
    energy_scale: float = 1.0
    shell_tol: float = field(default=None)

    def __post_init__(self):
        if self.dispersion is None:
            object.__setattr__(self, "dispersion", cosine_dispersion(self.grid))
        eps = np.ascontiguousarray(self.dispersion, dtype=np.float64)
        if eps.shape != (self.grid.size,) or not np.all(np.isfinite(eps)):
            raise ValueError("dispersion must be a finite array over the grid")
        object.__setattr__(self, "dispersion", eps)
        if self.mode not in ("exact-shell", "broadened"):
            raise ValueError(f"unknown conservation mode {self.mode!r}")
        if self.mode == "exact-shell" and self.grid.dimension == 1:
            # only trivial quadruples conserve energy exactly on a 1D band
            raise ValueError("1D grids are supported in broadened mode only")
        if self.mode == "broadened" and not self.eta > 0:
            raise ValueError("broadened mode needs eta > 0")
        if self.form not in ("uehling-uhlenbeck", "bilinear"):
            raise ValueError(f"unknown collision form {self.form!r}")
        if self.shell_tol is None:
            object.__setattr__(self, "shell_tol", 1e-9 * self.energy_scale)
        if not callable(self.vertex) and not self.vertex >= 0:
            raise ValueError("constant vertex must be non-negative")

    @property
    def bilinear(self) -> bool:
        return self.form == "bilinear"

    @cached_property
    def quadruples(self):
        """Cached ``(i1, i2, i3, i4, weight)`` over the conserving set, weight = vertex * shell factor."""
        backend = get_backend()
        i1, i2, i3, i4, shell = backend.enumerate_quadruples(
            self.grid.integer_momenta, self.grid.side, self.dispersion,
            self.shell_tol, self.mode == "broadened", float(self.eta),
        )
        if callable(self.vertex):
            vert = np.asarray(self.vertex(self.grid, i1, i2, i3, i4), dtype=np.float64)
            check_vertex_symmetry(self.vertex, self.grid, i1, i2, i3, i4)
        else:
            vert = float(self.vertex)
        weight = np.ascontiguousarray(vert * shell, dtype=np.float64)
        if np.any(weight < 0):
            raise ValueError("vertex amplitude must be non-negative")
        return i1, i2, i3, i4, weight

    def with_backend_table(self, backend):
        """Recompute the quadruple table with an explicit backend (for cross-checks)."""
        return get_backend(backend).enumerate_quadruples(
            self.grid.integer_momenta, self.grid.side, self.dispersion,
            self.shell_tol, self.mode == "broadened", float(self.eta),
        )


def check_vertex_symmetry(vertex, grid, i1, i2, i3, i4, tol=1e-12):
    base = np.asarray(vertex(grid, i1, i2, i3, i4), dtype=float)
    for perm in ((i2, i1, i3, i4), (i1, i2, i4, i3), (i3, i4, i1, i2)):
        other = np.asarray(vertex(grid, *perm), dtype=float)
        if np.max(np.abs(other - base), initial=0.0) > tol:
            raise ValueError("vertex is not symmetric under the pair exchanges")
