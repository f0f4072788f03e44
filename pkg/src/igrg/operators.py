"""Dense Hermitian operator algebra.

Operators are plain complex ``numpy`` arrays; :func:`as_hermitian` is the
gate every public entry point passes its inputs through. Tensor products use
the convention that site 0 is the leftmost (most significant) Kronecker
factor, so ``embed_site_operator`` and ``partial_trace`` agree with
``np.kron(a0, np.kron(a1, ...))``.

Thermal states are stored with the normalisation ``Tr exp(K) = 1``, which
makes ``K = log(rho)`` and absorbs the identity-shift freedom of a
Hamiltonian at construction time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DomainError,
    GibbsOverflowError,
    HermiticityError,
    LatticeError,
    NumericalError,
    RankDeficiencyError,
)

HERMITIAN_DRIFT_TOL = 1e-8
RANK_FLOOR = 1e-12
EXP_OVERFLOW = 700.0


def hermitian_drift(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def as_hermitian(a, tol: float = HERMITIAN_DRIFT_TOL) -> np.ndarray:
    """Return ``(a + a^dagger)/2`` as complex128 after checking the drift.

    The drift tolerance is relative to ``max(1, max|a_ij|)``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("operator has non-finite entries")
    drift = hermitian_drift(a)
    scale = max(1.0, float(np.max(np.abs(a))))
    if drift > tol * scale:
        raise HermiticityError(f"operator is not Hermitian (drift {drift:.3e})")
    return 0.5 * (a + a.conj().T)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None) -> np.ndarray:
        """``V diag(values) V^dagger``; defaults to the stored eigenvalues."""
        lam = self.eigenvalues if values is None else values
        v = self.eigenvectors
        return as_hermitian((v * lam) @ v.conj().T)

    def to_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ a @ v

    def from_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ a @ v.conj().T


def eig(op) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    op = as_hermitian(op)
    try:
        lam, v = np.linalg.eigh(op)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    return SpectralDecomposition(_frozen(lam), _frozen(v))


def matrix_function(op, kind: str, s: float | None = None) -> np.ndarray:
    """Apply ``exp``, ``log`` or ``power`` (with exponent ``s``) spectrally."""
    dec = op if isinstance(op, SpectralDecomposition) else eig(op)
    lam = dec.eigenvalues
    if kind == "exp":
        values = np.exp(lam)
    elif kind == "log":
        _check_positive(lam, "log")
        values = np.log(lam)
    elif kind == "power":
        if s is None:
            raise ValueError("power requires an exponent s")
        if float(s).is_integer() and s >= 0:
            values = lam ** int(s)
        else:
            _check_positive(lam, f"power({s})")
            values = lam ** s
    else:
        raise ValueError(f"unknown matrix function {kind!r}")
    return dec.reconstruct(values)


def _check_positive(lam: np.ndarray, name: str) -> None:
    bad = lam[lam <= 0]
    if bad.size:
        raise DomainError(f"{name} needs positive eigenvalues, found {bad[0]:.6g}")


@dataclass(frozen=True)
class GibbsState:
    """Point ``K`` of the fixed-partition-function manifold, ``rho = exp(K)``.

    ``spectral`` holds the eigendecomposition of ``rho`` (which shares its
    eigenvectors with ``K``). ``log_z_offset`` is ``log Tr exp(K)`` of the
    stored ``K`` and is zero up to rounding.
    """

    hamiltonian: np.ndarray
    spectral: SpectralDecomposition
    log_z_offset: float = 0.0
    _rho: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return self.spectral.eigenvalues

    @property
    def rho(self) -> np.ndarray:
        if self._rho is None:
            object.__setattr__(self, "_rho", _frozen(self.spectral.reconstruct()))
        return self._rho

    def expectation(self, a) -> float:
        return float(np.real(np.trace(self.rho @ a)))


def normalize_to_gibbs(k_raw) -> GibbsState:
    """Shift ``k_raw`` by a multiple of the identity so that ``Tr exp(K) = 1``."""
    dec = eig(k_raw)
    lam = dec.eigenvalues
    if lam[-1] > EXP_OVERFLOW:
        raise GibbsOverflowError(
            f"largest eigenvalue {lam[-1]:.4g} exceeds {EXP_OVERFLOW}; "
            "rescale the Hamiltonian (e.g. subtract its maximum eigenvalue)"
        )
    log_z = logsumexp(lam)
    shifted = lam - log_z
    p = np.exp(shifted)
    if p[0] < RANK_FLOOR:
        raise RankDeficiencyError(
            f"thermal state has eigenvalue {p[0]:.3e} below {RANK_FLOOR}"
        )
    k = as_hermitian(np.asarray(k_raw, dtype=np.complex128)) - log_z * np.eye(len(lam))
    spec = SpectralDecomposition(_frozen(p), dec.eigenvectors)
    return GibbsState(_frozen(k), spec, float(logsumexp(shifted)))


def gibbs_from_density(rho) -> GibbsState:
    """GibbsState for a full-rank density matrix (trace is renormalised)."""
    dec = eig(rho)
    p = dec.eigenvalues
    if p[0] < RANK_FLOOR * max(1.0, p[-1]):
        raise RankDeficiencyError(f"density matrix has eigenvalue {p[0]:.3e}")
    p = p / p.sum()
    k = dec.reconstruct(np.log(p))
    return GibbsState(_frozen(k), SpectralDecomposition(_frozen(p), dec.eigenvectors),
                      float(logsumexp(np.log(p))))


def _site_shape(lattice) -> tuple[int, int]:
    return int(lattice.n_sites), int(lattice.local_dim)


def embed_site_operator(local, site: int, lattice) -> np.ndarray:
    """``1 x ... x local x ... x 1`` with ``local`` acting on ``site``."""
    n, d = _site_shape(lattice)
    local = np.asarray(local, dtype=np.complex128)
    if not 0 <= site < n:
        raise LatticeError(f"site {site} out of range for {n} sites")
    if local.shape != (d, d):
        raise LatticeError(f"local operator shape {local.shape} != ({d}, {d})")
    left = np.eye(d ** site)
    right = np.eye(d ** (n - site - 1))
    return np.kron(np.kron(left, local), right)


def embed_operator(local, sites, lattice) -> np.ndarray:
    """Embed an operator acting on the ordered ``sites`` (any positions)."""
    n, d = _site_shape(lattice)
    sites = list(sites)
    k = len(sites)
    if len(set(sites)) != k or any(not 0 <= s < n for s in sites):
        raise LatticeError(f"invalid site list {sites}")
    local = np.asarray(local, dtype=np.complex128)
    if local.shape != (d ** k, d ** k):
        raise LatticeError(f"local operator shape {local.shape} does not fit {k} sites")
    full = np.kron(local, np.eye(d ** (n - k)))
    # full acts on sites (sites..., rest...); permute tensor legs into place
    rest = [s for s in range(n) if s not in sites]
    order = sites + rest
    inv = np.argsort(order)
    t = full.reshape([d] * (2 * n))
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(d ** n, d ** n)


def partial_trace(op, keep, lattice) -> np.ndarray:
    """Trace out every site not in ``keep``; kept sites stay in ascending order."""
    n, d = _site_shape(lattice)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise LatticeError("keep set must be nonempty")
    if any(not 0 <= k < n for k in keep):
        raise LatticeError(f"keep set {keep} out of range for {n} sites")
    op = np.asarray(op, dtype=np.complex128)
    drop = [s for s in range(n) if s not in keep]
    t = op.reshape([d] * (2 * n))
    t = t.transpose(keep + drop + [n + s for s in keep] + [n + s for s in drop])
    dk, dd = d ** len(keep), d ** len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_hermitian(dim: int, seed=None, scale: float = 1.0) -> np.ndarray:
    """GUE-like Hermitian matrix with spectrum of order ``[-2, 2] * scale``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / (2.0 * np.sqrt(2.0 * dim))
    return as_hermitian(scale * h)


def random_gibbs(dim: int, seed=None, scale: float = 1.0) -> GibbsState:
    return normalize_to_gibbs(random_hermitian(dim, seed, scale))


def random_density(dim: int, seed=None, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rng = _rng(seed)
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    return as_hermitian(rho / np.trace(rho).real)
