"""Lattice generators and the closed-form Ising decimation example.

The swap generator ``L(rho) = sum_<ij> (U_ij rho U_ij - rho)`` exchanges
nearest-neighbour sites. It is unital, commutes with lattice translations on
periodic lattices, and its fixed points are the permutation-symmetric states.
In the Heisenberg picture it acts on single-site observables as the graph
Laplacian, so finite flow time ``t`` blurs observables over a length
``~ sqrt(t)``; in terms of a length scale ``l`` the generator would read
``(2 l / eps^2) L``, but every flow here is parameterised by ``t``.

The 1D decimation flow (trace out a site and shift the rest) changes the
system size and has no finite-volume realisation, so the counterexample is
handled through its closed forms on the ``(J, h, c)`` Ising manifold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp

from .errors import DomainError, LatticeError
from .operators import _rng, embed_operator, normalize_to_gibbs, random_hermitian
from .superop import LindbladGenerator, Superoperator

DEFAULT_CAP = 4096


@dataclass(frozen=True)
class LatticeSpec:
    """Hypercubic lattice of ``dims`` extents; site index is row-major in the coordinates."""

    dims: tuple
    local_dim: int = 2
    periodic: bool = True
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        dims = (self.dims,) if np.isscalar(self.dims) else tuple(self.dims)
        dims = tuple(int(x) for x in dims)
        if not 1 <= len(dims) <= 2 or any(x < 1 for x in dims):
            raise LatticeError(f"dims must be one or two positive extents, got {dims}")
        if self.local_dim < 1:
            raise LatticeError("local_dim must be positive")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def ring(cls, n: int, local_dim: int = 2):
        return cls((n,), local_dim, True)

    @classmethod
    def chain(cls, n: int, local_dim: int = 2):
        return cls((n,), local_dim, False)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def hilbert_dim(self) -> int:
        return self.local_dim ** self.n_sites

    def check_cap(self) -> None:
        if self.hilbert_dim > self.cap:
            raise LatticeError(
                f"Hilbert dimension {self.hilbert_dim} exceeds the cap {self.cap}"
            )

    def coords(self, site: int) -> tuple:
        return tuple(int(c) for c in np.unravel_index(site, self.dims))

    def index(self, coords) -> int:
        return int(np.ravel_multi_index(tuple(coords), self.dims))

    def neighbor_pairs(self) -> list:
        """Unordered nearest-neighbour pairs ``(i, j)``, ``i < j``, each once."""
        pairs = set()
        for site in range(self.n_sites):
            c = self.coords(site)
            for axis, extent in enumerate(self.dims):
                nc = list(c)
                nc[axis] += 1
                if nc[axis] == extent:
                    if not self.periodic:
                        continue
                    nc[axis] = 0
                other = self.index(nc)
                if other != site:
                    pairs.add((min(site, other), max(site, other)))
        return sorted(pairs)

    def translation_sites(self, shift) -> np.ndarray:
        """Permutation sending site ``i`` to the site at ``coords(i) + shift``."""
        if not self.periodic:
            raise LatticeError("translations need a periodic lattice")
        shift = np.atleast_1d(np.asarray(shift, dtype=int))
        if shift.shape != (len(self.dims),):
            raise LatticeError(f"shift {tuple(shift)} does not match lattice rank {len(self.dims)}")
        return np.array([
            self.index(np.mod(np.add(self.coords(s), shift), self.dims))
            for s in range(self.n_sites)
        ])

    def unit_shifts(self) -> list:
        eye = np.eye(len(self.dims), dtype=int)
        return [tuple(row) for row in eye]


def site_permutation_operator(lattice: LatticeSpec, perm) -> np.ndarray:
    """Unitary moving the content of site ``i`` to site ``perm[i]``."""
    n, d = lattice.n_sites, lattice.local_dim
    perm = np.asarray(perm)
    if sorted(perm.tolist()) != list(range(n)):
        raise LatticeError(f"{perm} is not a permutation of {n} sites")
    dim = d ** n
    src = np.arange(dim).reshape([d] * n).transpose(np.argsort(perm)).reshape(-1)
    u = np.zeros((dim, dim))
    u[np.arange(dim), src] = 1.0
    return u


def swap_operator(lattice: LatticeSpec, i: int, j: int) -> np.ndarray:
    perm = np.arange(lattice.n_sites)
    perm[i], perm[j] = j, i
    return site_permutation_operator(lattice, perm)


def swap_generator(lattice: LatticeSpec) -> LindbladGenerator:
    """``rho -> sum_<ij> (U_ij rho U_ij^dagger - rho)`` over nearest-neighbour pairs."""
    lattice.check_cap()
    pairs = lattice.neighbor_pairs()
    dim = lattice.hilbert_dim
    eye = np.eye(dim)
    terms = [(1.0, u, u) for u in (swap_operator(lattice, i, j) for i, j in pairs)]
    if pairs:
        terms.append((-float(len(pairs)), eye, eye))
    return LindbladGenerator(terms, dim, tag="swap", lattice=lattice)


def translation_operator(lattice: LatticeSpec, shift) -> Superoperator:
    """Conjugation ``rho -> T rho T^dagger`` by the lattice translation ``shift``."""
    lattice.check_cap()
    u = site_permutation_operator(lattice, lattice.translation_sites(shift))
    return Superoperator([(1.0, u, u.T)], lattice.hilbert_dim, tag=f"T{tuple(np.atleast_1d(shift))}")


def translation_invariant_hamiltonian(lattice: LatticeSpec, local, sites=(0, 1)) -> np.ndarray:
    """``sum_x T_x(local)`` with ``local`` acting on the ordered ``sites``."""
    base = embed_operator(local, sites, lattice)
    total = np.zeros_like(base)
    n = lattice.n_sites
    seen = set()
    for site in range(n):
        shift = lattice.coords(site)
        perm = lattice.translation_sites(shift)
        key = tuple(perm)
        if key in seen:
            continue
        seen.add(key)
        u = site_permutation_operator(lattice, perm)
        total += u @ base @ u.T
    return total


def laplacian_matrix(lattice: LatticeSpec) -> np.ndarray:
    """Graph Laplacian ``A - D`` of the nearest-neighbour graph."""
    n = lattice.n_sites
    lap = np.zeros((n, n))
    for i, j in lattice.neighbor_pairs():
        lap[i, j] += 1
        lap[j, i] += 1
        lap[i, i] -= 1
        lap[j, j] -= 1
    return lap


def heisenberg_adjoint_single_site(lattice: LatticeSpec, profile) -> np.ndarray:
    """Action of the adjoint swap generator on ``sum_i f_i a_i`` as a map on ``f``.

    Single-site observables of one species span an invariant subspace of the
    adjoint generator, on which it is the discrete Laplacian.
    """
    if len(lattice.dims) != 1:
        raise LatticeError("single-site profile reduction is implemented for 1D chains")
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (lattice.n_sites,):
        raise LatticeError(f"profile length {profile.shape} != {lattice.n_sites}")
    return laplacian_matrix(lattice) @ profile


@dataclass(frozen=True)
class DiffusionReport:
    n_sites: int
    t: float
    evolved: np.ndarray
    gaussian: np.ndarray
    l1_distance: float
    variance: float


def diffusion_kernel_check(n_sites: int, t: float) -> DiffusionReport:
    """Compare ``exp(t Laplacian)`` acting on a central delta with the heat kernel.

    Open chain, ``n_sites`` odd, ``t <= (n_sites / 8)^2`` so the profile does
    not reach the ends.
    """
    if n_sites % 2 != 1:
        raise DomainError("diffusion check needs an odd chain length")
    if t < 0 or t > (n_sites / 8.0) ** 2:
        raise DomainError(f"t={t} outside [0, (N/8)^2] = [0, {(n_sites / 8.0) ** 2:.4g}]")
    centre = n_sites // 2
    delta = np.zeros(n_sites)
    delta[centre] = 1.0
    lap = laplacian_matrix(LatticeSpec.chain(n_sites))
    evolved = la.expm(t * lap) @ delta
    k = np.arange(n_sites) - centre
    if t > 0:
        gaussian = np.exp(-k ** 2 / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    else:
        gaussian = delta.copy()
    total = evolved.sum()
    variance = float(np.sum(evolved * k ** 2) / total - (np.sum(evolved * k) / total) ** 2)
    return DiffusionReport(n_sites, float(t), evolved, gaussian,
                           float(np.sum(np.abs(evolved - gaussian))), variance)


# --- 1D Ising decimation counterexample ---------------------------------------------


@dataclass(frozen=True)
class IsingPoint1D:
    """``K = J sum S_i S_{i+1} + h sum S_i + c 1``; ``c`` defaults to the stable value."""

    J: float
    h: float = 0.0
    c: float | None = None

    def __post_init__(self):
        if self.c is None:
            object.__setattr__(self, "c", stable_identity_coefficient(self.J))

    @property
    def on_stable_submanifold(self) -> bool:
        return abs(self.h) <= 1e-12 and abs(self.c - stable_identity_coefficient(self.J)) <= 1e-12


def stable_identity_coefficient(J: float) -> float:
    """``-log(2 cosh J)``, the identity shift that zeroes the free-energy density."""
    J = abs(float(J))
    return -(J + np.log1p(np.exp(-2.0 * J)))


@dataclass(frozen=True)
class IsingBeta1D:
    dJdt: float
    dcdt: float
    b_local: str


def ising1d_beta(point: IsingPoint1D) -> IsingBeta1D:
    """Local beta term ``b_i = -e^-J sinh(J) S_i S_{i+1} - log(2 cosh J) 1``.

    ``dcdt`` is the identity coefficient of ``b_i``.
    """
    if not point.on_stable_submanifold:
        raise DomainError(f"{point} is off the stable submanifold h = 0, c = -log(2 cosh J)")
    J = point.J
    djdt = -np.exp(-J) * np.sinh(J)
    dcdt = stable_identity_coefficient(J)
    return IsingBeta1D(float(djdt), float(dcdt),
                       f"{djdt:.6g} S_i S_(i+1) + {dcdt:.6g} 1")


def ising1d_coupling_rate(J):
    """``dJ/dt = -exp(-J) sinh(J) = -(1 - exp(-2J)) / 2``."""
    return 0.5 * np.expm1(-2.0 * np.asarray(J, dtype=float)) + 0.0  # no signed zero


def ising1d_flow(J0: float, times) -> np.ndarray:
    """Integrate ``dJ/dt`` from ``J0`` and sample at ``times``."""
    times = np.asarray(times, dtype=float)
    sol = solve_ivp(lambda t, y: ising1d_coupling_rate(y), (times[0], times[-1]), [J0],
                    t_eval=times, rtol=1e-10, atol=1e-12)
    return sol.y[0]


def ising1d_speed_density(J) -> np.ndarray | float:
    """``f(J) = exp(-2J) tanh(J)^2``."""
    J = np.asarray(J, dtype=float)
    f = np.exp(-2.0 * J) * np.tanh(J) ** 2
    return float(f) if f.ndim == 0 else f


def ising1d_curve(J_grid) -> list:
    """Rows ``(J, f, dJdt)`` for export."""
    J_grid = np.asarray(J_grid, dtype=float)
    return [(float(j), float(ising1d_speed_density(j)), float(ising1d_coupling_rate(j)))
            for j in J_grid]


def transfer_matrix_speed_density(J: float, n_sites: int = 32) -> float:
    """Transfer-matrix evaluation of ``sum_x Cov(b_0, b_x)`` on an open chain.

    ``b_x`` is the coupling part of the local beta term on bond ``x``; the
    sum runs over all bonds with the reference bond in the middle. On an
    open chain the bond variables are independent at ``h = 0``, so the result
    has no finite-size correction.
    """
    spins = np.array([1.0, -1.0])
    w = np.exp(J * np.outer(spins, spins))
    w /= np.max(w)

    def moment(insert: dict) -> float:
        v = insert.get(0, np.ones(2)).copy()
        for site in range(1, n_sites):
            v = (v @ w) * insert.get(site, np.ones(2))
            v /= 2.0
        return float(v.sum())

    z = moment({})

    def bond_product(*bonds):
        counts = {}
        for b in bonds:
            for s in (b, b + 1):
                counts[s] = counts.get(s, 0) + 1
        return moment({s: spins ** k for s, k in counts.items()}) / z

    ref = (n_sites - 1) // 2
    mean_ref = bond_product(ref)
    cov_sum = 0.0
    for bond in range(n_sites - 1):
        cov_sum += bond_product(ref, bond) - mean_ref * bond_product(bond)
    amplitude = np.exp(-J) * np.sinh(J)
    return float(amplitude ** 2 * cov_sum)


def random_translation_invariant_state(lattice: LatticeSpec, seed=None, scale: float = 1.0):
    """Gibbs state of ``sum_x T_x(h_bond + h_site)`` with random local terms.

    One random two-site term per lattice axis (site 0 with its forward
    neighbour) plus a random single-site field.
    """
    rng = _rng(seed)
    d = lattice.local_dim
    k = np.zeros((lattice.hilbert_dim, lattice.hilbert_dim), dtype=np.complex128)
    for shift in lattice.unit_shifts():
        other = lattice.translation_sites(shift)[0]
        if other == 0:
            continue
        bond = random_hermitian(d * d, rng, scale)
        k += translation_invariant_hamiltonian(lattice, bond, (0, int(other)))
    k += translation_invariant_hamiltonian(lattice, random_hermitian(d, rng, scale), (0,))
    return normalize_to_gibbs(k)
