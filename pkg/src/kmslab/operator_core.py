"""Finite fermionic lattice algebra on a Jordan-Wigner encoded Fock space.

Basis convention: the Fock basis index ``s`` is an ``N``-bit integer and site
``i`` is occupied when bit ``N - 1 - i`` is set, so site 0 is the leftmost
tensor factor (``np.kron`` order).  The JW string of ``a_i`` runs over sites
``0 .. i-1``.  Operators are plain dense ``numpy`` arrays of shape
``(2**N, 2**N)``; real dtype is kept whenever the construction is real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse.csgraph import connected_components

MAX_SITES = 14


class LatticeError(ValueError):
    """Invalid lattice geometry or an operation the geometry cannot support."""


@dataclass(frozen=True)
class LatticeSpec:
    sites: int
    geometry: str = "chain"  # "chain" | "grid"
    boundary: str = "periodic"  # "periodic" | "open"
    shape: tuple[int, ...] | None = None
    max_sites: int = MAX_SITES

    def __post_init__(self):
        if self.sites < 1:
            raise LatticeError(f"need at least one site, got {self.sites}")
        if self.sites > self.max_sites:
            raise LatticeError(
                f"{self.sites} sites exceeds the dense cap of {self.max_sites} "
                f"(2**{self.sites} dimensional Fock space)"
            )
        if self.geometry not in ("chain", "grid"):
            raise LatticeError(f"unknown geometry {self.geometry!r}")
        if self.boundary not in ("periodic", "open"):
            raise LatticeError(f"unknown boundary {self.boundary!r}")
        shape = self.shape
        if self.geometry == "chain":
            shape = (self.sites,) if shape is None else tuple(shape)
            if shape != (self.sites,):
                raise LatticeError("chain shape must be (sites,)")
        else:
            if shape is None or len(shape) != 2:
                raise LatticeError("grid geometry needs a 2-tuple shape")
            if int(np.prod(shape)) != self.sites:
                raise LatticeError(f"grid shape {shape} does not multiply to {self.sites}")
        object.__setattr__(self, "shape", tuple(int(s) for s in shape))

    @classmethod
    def chain(cls, n, boundary="periodic"):
        return cls(n, "chain", boundary)

    @classmethod
    def grid(cls, lx, ly, boundary="periodic"):
        return cls(lx * ly, "grid", boundary, (lx, ly))

    @property
    def dim(self) -> int:
        return 2**self.sites

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def coords(self, site):
        """Row-major coordinates of ``site``."""
        return tuple(int(c) for c in np.unravel_index(site, self.shape))

    def index(self, coords):
        if self.periodic:
            coords = [c % s for c, s in zip(coords, self.shape)]
        return int(np.ravel_multi_index(tuple(coords), self.shape))

    def bonds(self):
        """Unique nearest-neighbour pairs ``(i, j)`` with ``i != j``."""
        out = set()
        for site in range(self.sites):
            c = self.coords(site)
            for axis, length in enumerate(self.shape):
                nxt = list(c)
                nxt[axis] += 1
                if nxt[axis] >= length:
                    if not self.periodic:
                        continue
                    nxt[axis] %= length
                other = self.index(nxt)
                if other != site:
                    out.add((min(site, other), max(site, other)))
        return sorted(out)

    def shift(self, site, displacement):
        """Site reached from ``site`` by a lattice translation."""
        if not self.periodic:
            raise LatticeError("translations need a periodic boundary")
        disp = np.atleast_1d(displacement)
        if disp.size == 1 and len(self.shape) > 1:
            disp = np.array([0] * (len(self.shape) - 1) + [int(disp[0])])
        c = np.array(self.coords(site)) + disp
        return self.index(c)


@dataclass(frozen=True)
class HamiltonianSpec:
    hopping: float = 1.0
    interaction: float = 1.0
    chemical_potential: float = 0.0
    perturbation: str = "hopping-modulation"  # see PERTURBATIONS
    perturbation_strength: float = 1.0
    coupling: float = 0.0

    def __post_init__(self):
        vals = (self.hopping, self.interaction, self.chemical_potential,
                self.perturbation_strength, self.coupling)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("Hamiltonian parameters must be finite")
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(
                f"unknown perturbation {self.perturbation!r}; choose from {sorted(PERTURBATIONS)}"
            )


# ---------------------------------------------------------------------------
# Fock space primitives


def _occupation_table(n):
    s = np.arange(2**n)
    return ((s[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(np.int8)


@lru_cache(maxsize=32)
def _creation_cached(n, site):
    dim = 2**n
    occ = _occupation_table(n)
    src = np.nonzero(occ[:, site] == 0)[0]
    dst = src | (1 << (n - 1 - site))
    sign = np.where(occ[src, :site].sum(axis=1) % 2 == 0, 1.0, -1.0)
    op = np.zeros((dim, dim))
    op[dst, src] = sign
    op.flags.writeable = False
    return op


def build_creation(lattice: LatticeSpec, site: int) -> np.ndarray:
    """Return the JW matrix of ``a_site^*``."""
    if not 0 <= site < lattice.sites:
        raise IndexError(f"site {site} outside 0..{lattice.sites - 1}")
    return _creation_cached(lattice.sites, site).copy()


def build_annihilation(lattice, site):
    return build_creation(lattice, site).T.copy()


def number_operator(lattice, site):
    occ = _occupation_table(lattice.sites)[:, site]
    return np.diag(occ.astype(float))


def total_number(lattice):
    return np.diag(_occupation_table(lattice.sites).sum(axis=1).astype(float))


def dagger(a):
    return a.conj().T


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def op_norm(a):
    """Operator (spectral) norm."""
    if a.shape == (1, 1):
        return float(abs(a[0, 0]))
    if np.allclose(a, dagger(a), atol=0, rtol=0):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def is_hermitian(a, tol=1e-12):
    return np.max(np.abs(a - dagger(a)), initial=0.0) <= tol


# ---------------------------------------------------------------------------
# Hamiltonians


def _add_hopping(h, lattice, i, j, coeff=1.0):
    """In place: ``h += coeff * (a_i^* a_j + a_j^* a_i)`` for ``i != j``."""
    n = lattice.sites
    lo, hi = min(i, j), max(i, j)
    occ = _occupation_table(n)
    # states with j occupied and i empty; a_i^* a_j moves the particle
    src = np.nonzero((occ[:, j] == 1) & (occ[:, i] == 0))[0]
    dst = src ^ (1 << (n - 1 - i)) ^ (1 << (n - 1 - j))
    between = occ[src, lo + 1:hi].sum(axis=1)
    sign = np.where(between % 2 == 0, coeff, -coeff)
    h[dst, src] += sign
    h[src, dst] += sign
    return h


def hopping_term(lattice, i, j):
    """``a_i^* a_j + a_j^* a_i``, built from bit operations."""
    if i == j:
        return 2.0 * number_operator(lattice, i)
    return _add_hopping(np.zeros((lattice.dim, lattice.dim)), lattice, i, j)


def _nnn_pairs(lattice):
    """Translation-invariant next-nearest pairs (two steps along each axis)."""
    out = set()
    for site in range(lattice.sites):
        c = lattice.coords(site)
        for axis, length in enumerate(lattice.shape):
            nxt = list(c)
            nxt[axis] += 2
            if nxt[axis] >= length:
                if not lattice.periodic:
                    continue
                nxt[axis] %= length
            other = lattice.index(nxt)
            if other != site:
                out.add((min(site, other), max(site, other)))
    return sorted(out)


def _pert_nnn_hopping(lattice):
    h = np.zeros((lattice.dim, lattice.dim))
    for i, j in _nnn_pairs(lattice):
        _add_hopping(h, lattice, i, j)
    return h


def _pert_staggered_hopping(lattice):
    """Bond modulation ``sum_x (-1)^{x_axis} (a_x^* a_{x+e} + h.c.)``."""
    h = np.zeros((lattice.dim, lattice.dim))
    seen = set()
    for site in range(lattice.sites):
        c = lattice.coords(site)
        for axis, length in enumerate(lattice.shape):
            nxt = list(c)
            nxt[axis] += 1
            if nxt[axis] >= length and not lattice.periodic:
                continue
            other = lattice.index(nxt)
            key = frozenset((site, other))
            if other == site or key in seen:
                continue
            seen.add(key)
            _add_hopping(h, lattice, site, other, (-1.0) ** c[axis])
    return h


def _pert_nnn_density(lattice):
    n = [np.diag(number_operator(lattice, s)) for s in range(lattice.sites)]
    diag = np.zeros(lattice.dim)
    for i, j in _nnn_pairs(lattice):
        diag += n[i] * n[j]
    return np.diag(diag)


def _pert_local_potential(lattice):
    """Impurity potential ``n_0``; breaks translation invariance."""
    return number_operator(lattice, 0).astype(float)


PERTURBATIONS = {
    "hopping-modulation": _pert_staggered_hopping,  # quasifree, period-2 bond modulation
    "nnn-hopping": _pert_nnn_hopping,  # quasifree, translation invariant, commutes with K
    "quartic-local": _pert_nnn_density,  # n_i n_{i+2}
    "local-potential": _pert_local_potential,  # quasifree impurity on site 0
}


def build_hamiltonian(lattice: LatticeSpec, spec: HamiltonianSpec):
    """Return ``(K, V, H')`` for ``H_lambda = K + V + lambda * H'``.

    ``K = -J sum_<ij> (a_i^* a_j + h.c.) - mu sum_i n_i`` and
    ``V = U sum_<ij> n_i n_j``; ``H'`` is the named perturbation template
    scaled by ``spec.perturbation_strength``.
    """
    dim = lattice.dim
    occ = _occupation_table(lattice.sites).astype(float)
    kin = np.zeros((dim, dim))
    vdiag = np.zeros(dim)
    for i, j in lattice.bonds():
        _add_hopping(kin, lattice, i, j, -spec.hopping)
        vdiag += occ[:, i] * occ[:, j]
    kin[np.diag_indices(dim)] -= spec.chemical_potential * occ.sum(axis=1)
    inter = np.diag(spec.interaction * vdiag)
    pert = spec.perturbation_strength * PERTURBATIONS[spec.perturbation](lattice)
    return kin, inter, pert


# ---------------------------------------------------------------------------
# Functional calculus


def _blocks(h, tol=0.0):
    """Index sets of the connected components of the sparsity graph of ``h``."""
    pattern = np.abs(h) > tol
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=ncomp))[:-1]
    return np.split(order, splits)


def eigh_blocked(h):
    """Hermitian eigendecomposition exploiting exact block structure.

    Returns ``(evals, evecs)`` with ``h = evecs @ diag(evals) @ evecs^*``.
    The eigenvectors of a block are zero outside that block, so sector
    structure (e.g. particle number) is preserved exactly.
    """
    dim = h.shape[0]
    evals = np.empty(dim)
    evecs = np.zeros_like(h, dtype=np.result_type(h.dtype, np.float64))
    pos = 0
    for idx in _blocks(h):
        sub = h[np.ix_(idx, idx)]
        w, v = np.linalg.eigh(sub)
        cols = np.arange(pos, pos + len(idx))
        evals[cols] = w
        evecs[np.ix_(idx, cols)] = v
        pos += len(idx)
    order = np.argsort(evals, kind="stable")
    return evals[order], evecs[:, order]


def hermitian_function(h, func, eig=None):
    w, v = eig if eig is not None else eigh_blocked(h)
    return (v * func(w)) @ dagger(v)


def gibbs_state(h: np.ndarray, beta: float, eig=None) -> np.ndarray:
    """``exp(-beta H) / Tr exp(-beta H)`` via the eigenbasis with max-shift."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    w, v = eig if eig is not None else eigh_blocked(h)
    logits = -beta * w
    weights = np.exp(logits - logits.max())
    weights /= weights.sum()
    rho = (v * weights) @ dagger(v)
    return 0.5 * (rho + dagger(rho))


def heisenberg_evolve(a: np.ndarray, h: np.ndarray, t: float, eig=None) -> np.ndarray:
    """``e^{iHt} A e^{-iHt}``, computed in the eigenbasis of ``H``."""
    if t == 0:
        return a.copy()
    w, v = eig if eig is not None else eigh_blocked(h)
    a_e = dagger(v) @ a @ v
    phase = np.exp(1j * w * t)
    a_e = phase[:, None] * a_e * phase.conj()[None, :]
    out = v @ a_e @ dagger(v)
    if np.isrealobj(a) and np.isrealobj(h) and np.allclose(out.imag, 0, atol=1e-15):
        return out.real.copy()
    return out


def von_neumann_entropy(rho):
    r = np.linalg.eigvalsh(rho)
    r = r[r > 1e-300]
    return float(-np.sum(r * np.log(r)))


def check_density_matrix(rho, tol=1e-12):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, PSD and unit trace to ``tol``."""
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"trace {np.trace(rho).real:.3e} differs from 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def expect(rho, *ops):
    """``Tr(rho A_1 A_2 ...)``; diagonal operators are multiplied without matmuls."""
    diag_ops = [o for o in ops if _is_diagonal(o)]
    if len(diag_ops) == len(ops):
        d = np.ones(rho.shape[0], dtype=np.result_type(*ops, np.float64))
        for o in ops:
            d = d * np.diag(o)
        return complex(np.sum(np.diag(rho) * d))
    prod = ops[0]
    for o in ops[1:]:
        prod = prod @ o
    return complex(np.sum(rho * prod.T))


def _is_diagonal(a):
    n = a.shape[0]
    return not np.any(a.reshape(-1)[:-1].reshape(n - 1, n + 1)[:, 1:])


# ---------------------------------------------------------------------------
# Translations


@lru_cache(maxsize=64)
def _translation_perm(lattice: LatticeSpec, displacement):
    """Signed permutation ``(perm, sign)`` with ``(T psi)[perm[s]] = sign[s] psi[s]``."""
    n = lattice.sites
    occ = _occupation_table(n)
    target = np.array([lattice.shift(i, displacement) for i in range(n)])
    dim = 2**n
    perm = np.zeros(dim, dtype=np.int64)
    sign = np.ones(dim)
    for s in range(dim):
        sites = np.nonzero(occ[s])[0]
        new = target[sites]
        # parity of the permutation sorting the relabelled creation string
        inversions = int(np.sum(np.triu(new[:, None] > new[None, :], 1)))
        sign[s] = -1.0 if inversions % 2 else 1.0
        perm[s] = int(np.sum(1 << (n - 1 - new))) if len(new) else 0
    return perm, sign


def translation_operator(lattice, displacement=1):
    """Unitary ``T`` with ``T a_i T^* = a_{i + displacement}``."""
    key = tuple(np.atleast_1d(displacement).tolist())
    perm, sign = _translation_perm(lattice, key if len(key) > 1 else key[0])
    dim = lattice.dim
    t = np.zeros((dim, dim))
    t[perm, np.arange(dim)] = sign
    return t


def translate(a: np.ndarray, lattice: LatticeSpec, displacement=1) -> np.ndarray:
    """Lattice translation ``sigma_j(A) = T^j A T^{-j}`` with fermionic signs."""
    if not lattice.periodic:
        raise LatticeError("translate is only defined on periodic lattices")
    disp = np.atleast_1d(displacement)
    if not np.any(disp % np.array(lattice.shape[-len(disp):])):
        return a.copy()
    key = tuple(disp.tolist())
    perm, sign = _translation_perm(lattice, key if len(key) > 1 else key[0])
    out = np.empty_like(a)
    out[np.ix_(perm, perm)] = sign[:, None] * a * sign[None, :]
    return out


# ---------------------------------------------------------------------------
# Momentum space


def momenta(lattice):
    """Momentum vectors ``2 pi k / L`` for every lattice momentum, row-major."""
    axes = [2 * np.pi * np.arange(n) / n for n in lattice.shape]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def momentum_correlations(rho, lattice):
    """Matrix ``G[p, q] = <a^*(p) a(q)>`` with ``a(p) = N^{-1/2} sum_x e^{-ipx} a_x``."""
    n = lattice.sites
    cre = [build_creation(lattice, x) for x in range(n)]
    real_space = np.empty((n, n), dtype=complex)
    for x in range(n):
        left = rho @ cre[x]
        for y in range(n):
            # Tr(rho a_x^* a_y) = sum(rho a_x^* * a_y^T)
            real_space[x, y] = np.sum(left * cre[y])
    pos = np.array([lattice.coords(x) for x in range(n)], dtype=float)
    phase = np.exp(1j * momenta(lattice) @ pos.T) / np.sqrt(n)  # [p, x]
    return phase @ real_space @ phase.conj().T


def occupation(rho, lattice):
    """Diagonal of ``momentum_correlations``: the occupation ``rho(p)``."""
    return np.real(np.diag(momentum_correlations(rho, lattice)))


def two_point(rho, lattice, f, g) -> complex:
    """``omega(a^*(f) a(g))`` for momentum-space amplitudes ``f``, ``g``."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (lattice.sites,) or g.shape != (lattice.sites,):
        raise ValueError(
            f"amplitudes must have shape ({lattice.sites},), got {f.shape} and {g.shape}"
        )
    corr = momentum_correlations(rho, lattice)
    return complex(f @ corr @ g.conj())


def random_hermitian(dim, rng, scale=1.0):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (x + dagger(x))


def random_density_matrix(dim, rng, rank=None):
    rank = dim if rank is None else rank
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = x @ dagger(x)
    return rho / np.trace(rho).real
