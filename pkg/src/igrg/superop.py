"""Superoperators given as sums of sandwich terms, plus Kraus channels.

A :class:`Superoperator` is ``X -> sum_k c_k L_k X R_k``. Vectorisation is
row-major (``X.reshape(-1)``), for which ``vec(L X R) = (L kron R^T) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import ChannelError
from .operators import _rng

DENSE_PROPAGATOR_MAX_DIM = 64
RK4_LOCAL_TOL = 1e-9


class Superoperator:
    """Linear map on ``dim x dim`` matrices, ``X -> sum c L X R``."""

    def __init__(self, terms, dim: int | None = None, tag: str = "", lattice=None):
        terms = tuple((complex(c), np.asarray(l), np.asarray(r)) for c, l, r in terms)
        if dim is None:
            if not terms:
                raise ValueError("empty superoperator needs an explicit dim")
            dim = terms[0][1].shape[0]
        for _, l, r in terms:
            if l.shape != (dim, dim) or r.shape != (dim, dim):
                raise ValueError(f"term shapes {l.shape}, {r.shape} do not match dim {dim}")
        self.terms = terms
        self.dim = dim
        self.tag = tag
        self.lattice = lattice
        self._cache = {}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, terms={len(self.terms)}, tag={self.tag!r})"

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.dim, self.dim):
            raise ValueError(f"operand shape {x.shape} does not match dim {self.dim}")
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for c, l, r in self.terms:
            out += c * (l @ x @ r)
        return out

    __call__ = apply

    def adjoint(self):
        """Hilbert-Schmidt adjoint: ``X -> sum conj(c) L^dagger X R^dagger``."""
        terms = [(np.conj(c), l.conj().T, r.conj().T) for c, l, r in self.terms]
        return type(self)(terms, self.dim, f"{self.tag}^dagger" if self.tag else "", self.lattice)

    @cached_property
    def is_real(self) -> bool:
        return all(c.imag == 0 and np.isrealobj(l) and np.isrealobj(r)
                   for c, l, r in self.terms)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense ``dim^2 x dim^2`` matrix acting on row-major ``vec``."""
        n = self.dim * self.dim
        m = np.zeros((n, n), dtype=np.float64 if self.is_real else np.complex128)
        for c, l, r in self.terms:
            m += (c.real if self.is_real else c) * np.kron(l, r.T)
        return m


def _real_matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    return m @ v.real + 1j * (m @ v.imag)


class LindbladGenerator(Superoperator):
    """Generator of a semigroup of channels, ``d rho / dt = L(rho)``.

    ``propagate`` applies ``exp(t L)``: exactly through the dense
    vectorised generator up to ``dim = 64`` (spectral decomposition when the
    generator is self-adjoint, ``expm`` otherwise), and by adaptive RK4 above.
    Negative ``t`` is accepted for finite-difference stencils.
    """

    def trace_defect(self, x) -> float:
        return abs(np.trace(self.apply(x)))

    @cached_property
    def _hermitian_spectrum(self):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > 1e-13:
            return None
        lam, vecs = np.linalg.eigh(m)
        return lam, vecs, np.ascontiguousarray(vecs.conj().T)

    def propagate(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if t == 0:
            return x.copy()
        if self.dim > DENSE_PROPAGATOR_MAX_DIM:
            return self._propagate_rk4(x, t)
        spec = self._hermitian_spectrum
        v = x.reshape(-1)
        if spec is not None:
            lam, vecs, vecs_h = spec
            if np.isrealobj(vecs):
                # keep the real eigenbasis real instead of upcasting it
                out = _real_matvec(vecs, np.exp(t * lam) * _real_matvec(vecs_h, v))
            else:
                out = vecs @ (np.exp(t * lam) * (vecs_h @ v))
        else:
            key = ("expm", float(t))
            if key not in self._cache:
                self._cache[key] = la.expm(t * self.matrix)
            out = self._cache[key] @ v
        return out.reshape(self.dim, self.dim)

    def _propagate_rk4(self, x, t: float) -> np.ndarray:
        # step doubling: compare one h step with two h/2 steps
        def step(y, h):
            k1 = self.apply(y)
            k2 = self.apply(y + 0.5 * h * k1)
            k3 = self.apply(y + 0.5 * h * k2)
            k4 = self.apply(y + h * k3)
            return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

        direction = np.sign(t)
        remaining = abs(t)
        h = min(remaining, 0.05)
        y = x
        while remaining > 0:
            h = min(h, remaining)
            full = step(y, direction * h)
            half = step(step(y, direction * h / 2), direction * h / 2)
            err = np.max(np.abs(full - half)) / 15.0
            if err <= RK4_LOCAL_TOL or h < 1e-8:
                y = half + (half - full) / 15.0
                if abs(np.trace(x)) > 1e-12:
                    y = y * (np.trace(x) / np.trace(y))
                remaining -= h
                h *= min(2.0, 0.9 * (RK4_LOCAL_TOL / max(err, 1e-300)) ** 0.2)
            else:
                h *= max(0.2, 0.9 * (RK4_LOCAL_TOL / err) ** 0.2)
        return y


def lindblad_from_jumps(hamiltonian, jumps, tag: str = "gkls") -> LindbladGenerator:
    """``-i[H, rho] + sum_k (J rho J^dagger - {J^dagger J, rho}/2)``."""
    h = np.asarray(hamiltonian, dtype=np.complex128)
    d = h.shape[0]
    eye = np.eye(d)
    terms = [(-1j, h, eye), (1j, eye, h)]
    for j in jumps:
        j = np.asarray(j, dtype=np.complex128)
        jdj = j.conj().T @ j
        terms += [(1, j, j.conj().T), (-0.5, jdj, eye), (-0.5, eye, jdj)]
    return LindbladGenerator(terms, d, tag)


@dataclass(frozen=True)
class KrausChannel:
    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus)
        if not ops:
            raise ChannelError("empty Kraus set")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    def trace_preservation_defect(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim_in))))

    def validate(self, tol: float = 1e-10) -> None:
        defect = self.trace_preservation_defect()
        if defect > tol:
            raise ChannelError(f"Kraus set is not trace preserving (defect {defect:.3e})")

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        return sum(k @ x @ k.conj().T for k in self.kraus)

    __call__ = apply


def random_channel(dim: int, n_kraus: int = 3, seed=None, dim_out: int | None = None) -> KrausChannel:
    """Channel from a Haar-like random isometry ``C^dim -> C^(n_kraus dim_out)``."""
    rng = _rng(seed)
    d_out = dim if dim_out is None else dim_out
    g = rng.standard_normal((n_kraus * d_out, dim)) + 1j * rng.standard_normal((n_kraus * d_out, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return KrausChannel(tuple(q[i * d_out:(i + 1) * d_out] for i in range(n_kraus)))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel((np.asarray(u),))


def replace_channel(d_keep: int, d_replace: int, replacement) -> KrausChannel:
    """``rho_AB -> Tr_B(rho_AB) kron tau_B`` with B the trailing factor."""
    tau = np.asarray(replacement, dtype=np.complex128)
    w, v = np.linalg.eigh(tau)
    ops = []
    eye = np.eye(d_keep)
    for j in range(d_replace):
        for i in range(d_replace):
            bra = np.zeros((1, d_replace))
            bra[0, i] = 1.0
            ket = np.sqrt(max(w[j], 0.0)) * v[:, j:j + 1]
            ops.append(np.kron(eye, ket @ bra))
    return KrausChannel(tuple(ops))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))

