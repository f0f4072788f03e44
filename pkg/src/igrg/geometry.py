"""Kubo-Mori information geometry of thermal states.

``omega`` maps a Hamiltonian perturbation ``a`` to the state perturbation
``d/dt exp(K + t a)``; ``omega_inv`` goes back (``d/dt log(rho + t x)``).
Both are diagonal in the eigenbasis of ``rho`` with kernels given by the
logarithmic mean of the eigenvalues and its reciprocal.

The two metrics are dual:

    <a, b>_K   = Tr(a omega(b))       (Hamiltonian picture, tangents have zero mean)
    <x, y>_rho = Tr(x omega_inv(y))   (state picture, tangents are traceless)

and ``<omega(a), omega(b)>_rho == <a, b>_K``. Only the Kubo-Mori member of the
family of monotone metrics is implemented.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import PictureError, RankDeficiencyError
from .operators import RANK_FLOOR, GibbsState, as_hermitian, eig

KERNEL_BRANCH_TOL = 1e-10
TANGENT_TOL = 1e-10


class Picture(enum.Enum):
    STATE = "state"
    HAMILTONIAN = "hamiltonian"


@dataclass(frozen=True)
class TangentVector:
    """Hermitian perturbation tagged with the manifold picture it lives in.

    With ``strict=True`` the tangency constraint is checked at construction,
    which for the Hamiltonian picture needs ``base``.
    """

    operator: np.ndarray
    picture: Picture
    base: GibbsState | None = None
    strict: bool = False

    def __post_init__(self):
        op = as_hermitian(self.operator)
        op.flags.writeable = False
        object.__setattr__(self, "operator", op)
        if self.strict:
            self.check(self.base)

    def constraint_residual(self, base: GibbsState | None = None) -> float:
        if self.picture is Picture.STATE:
            return abs(np.trace(self.operator).real)
        base = base if base is not None else self.base
        if base is None:
            raise PictureError("Hamiltonian-picture constraint needs a base state")
        return abs(base.expectation(self.operator))

    def check(self, base: GibbsState | None = None, tol: float = TANGENT_TOL) -> None:
        res = self.constraint_residual(base)
        scale = max(1.0, float(np.linalg.norm(self.operator, 2)))
        if res > tol * scale:
            what = "trace" if self.picture is Picture.STATE else "expectation value"
            raise PictureError(f"{self.picture.value}-picture tangent has {what} {res:.3e}")

    def __neg__(self):
        return TangentVector(-self.operator, self.picture, self.base)


def hamiltonian_tangent(state: GibbsState, a, strict: bool = True) -> TangentVector:
    """Project ``a`` onto zero expectation in ``state`` and wrap it."""
    a = as_hermitian(a)
    a = a - state.expectation(a) * np.eye(state.dim)
    return TangentVector(a, Picture.HAMILTONIAN, state, strict)


def state_tangent(x, strict: bool = True) -> TangentVector:
    x = as_hermitian(x)
    x = x - np.trace(x).real / x.shape[0] * np.eye(x.shape[0])
    return TangentVector(x, Picture.STATE, None, strict)


def _log_probabilities(state: GibbsState) -> np.ndarray:
    p = state.probabilities
    if p[0] < RANK_FLOOR:
        raise RankDeficiencyError(f"state has eigenvalue {p[0]:.3e} below {RANK_FLOOR}")
    return np.log(p)


def log_mean_kernel(state: GibbsState) -> np.ndarray:
    """Matrix ``k[i, j] = (p_i - p_j) / (ln p_i - ln p_j)``, ``k[i, i] = p_i``."""
    p = state.probabilities
    lp = _log_probabilities(state)
    d = lp[:, None] - lp[None, :]
    near = np.abs(d) < KERNEL_BRANCH_TOL
    safe = np.where(near, 1.0, d)
    # p_j * (exp(d) - 1) / d avoids cancellation in p_i - p_j
    k = np.where(near, 0.5 * (p[:, None] + p[None, :]), p[None, :] * np.expm1(safe) / safe)
    return 0.5 * (k + k.T)


def _apply_kernel(state: GibbsState, a, kernel: np.ndarray) -> np.ndarray:
    spec = state.spectral
    a_eig = spec.to_eigenbasis(np.asarray(a, dtype=np.complex128))
    return as_hermitian(spec.from_eigenbasis(a_eig * kernel))


def omega(state: GibbsState, a) -> np.ndarray:
    """``integral_0^1 rho^s a rho^(1-s) ds``."""
    return _apply_kernel(state, a, log_mean_kernel(state))


def omega_inv(state: GibbsState, x) -> np.ndarray:
    """``integral_0^inf (rho + u)^-1 x (rho + u)^-1 du``, the inverse of :func:`omega`."""
    return _apply_kernel(state, x, 1.0 / log_mean_kernel(state))


def free_energy(k) -> float:
    """``-log Tr exp(K)`` via log-sum-exp of the spectrum."""
    if isinstance(k, GibbsState):
        k = k.hamiltonian
    return 0.0 - float(logsumexp(eig(k).eigenvalues))


def relative_entropy(rho1: GibbsState, rho2: GibbsState) -> float:
    """``Tr rho1 (log rho1 - log rho2)`` using ``K = log rho``."""
    p = rho1.probabilities
    lp = _log_probabilities(rho1)
    _log_probabilities(rho2)
    k2 = rho1.spectral.to_eigenbasis(rho2.hamiltonian)
    return float(np.sum(p * lp) - np.sum(p * np.real(np.diag(k2))))


def _require(v: TangentVector, picture: Picture, base: GibbsState | None) -> np.ndarray:
    if not isinstance(v, TangentVector):
        raise PictureError("metric arguments must be TangentVector instances")
    if v.picture is not picture:
        raise PictureError(f"expected a {picture.value}-picture tangent, got {v.picture.value}")
    v.check(base)
    return v.operator


def _bilinear(state, a, b, kernel) -> float:
    spec = state.spectral
    ae = spec.to_eigenbasis(a)
    be = spec.to_eigenbasis(b)
    return float(np.real(np.sum(ae.conj() * be * kernel)))


def metric_hamiltonians(state: GibbsState, a: TangentVector, b: TangentVector) -> float:
    """``<a, b>_K = Tr(a omega(b))``."""
    a = _require(a, Picture.HAMILTONIAN, state)
    b = _require(b, Picture.HAMILTONIAN, state)
    return _bilinear(state, a, b, log_mean_kernel(state))


def metric_states(state: GibbsState, x: TangentVector, y: TangentVector) -> float:
    """Kubo-Mori metric ``<x, y>_rho = Tr(x omega_inv(y))``."""
    x = _require(x, Picture.STATE, state)
    y = _require(y, Picture.STATE, state)
    return _bilinear(state, x, y, 1.0 / log_mean_kernel(state))


def hamiltonian_norm2(state: GibbsState, a) -> float:
    """``Tr(a omega(a))`` for a raw operator, without the tangency check."""
    a = np.asarray(a, dtype=np.complex128)
    return _bilinear(state, a, a, log_mean_kernel(state))


def _mixed_second_difference(g, ha: float, hb: float) -> float:
    return (g(ha, hb) - g(ha, -hb) - g(-ha, hb) + g(-ha, -hb)) / (4.0 * ha * hb)


def metric_hamiltonians_fd(state: GibbsState, a, b, step: float = 1e-3) -> float:
    """``-d^2/dt ds F(K + t a + s b)`` by central differences.

    Each step is ``step`` divided by the operator norm of its direction.
    """
    k = state.hamiltonian
    a = as_hermitian(getattr(a, "operator", a))
    b = as_hermitian(getattr(b, "operator", b))
    ha = step / np.linalg.norm(a, 2)
    hb = step / np.linalg.norm(b, 2)

    def log_z(t, s):
        return logsumexp(np.linalg.eigvalsh(k + t * a + s * b))

    return _mixed_second_difference(log_z, ha, hb)


def metric_states_fd(state: GibbsState, x, y, step: float = 1e-3) -> float:
    """``d^2/dt ds S(rho + t x + s y || rho)`` by central differences.

    The step moves the state by ``step`` times its smallest eigenvalue in
    operator norm, which keeps ``rho + t x + s y`` positive and the
    truncation error uniform across spectra.
    """
    rho = state.rho
    x = as_hermitian(getattr(x, "operator", x))
    y = as_hermitian(getattr(y, "operator", y))
    pmin = state.probabilities[0]
    hx = step * pmin / np.linalg.norm(x, 2)
    hy = step * pmin / np.linalg.norm(y, 2)
    k = state.hamiltonian

    def rel_ent(t, s):
        r = rho + t * x + s * y
        lam = np.linalg.eigvalsh(r)
        return float(np.sum(lam * np.log(lam)) - np.real(np.trace(r @ k)))

    return _mixed_second_difference(rel_ent, hx, hy)
