"""Renormalisation flows on thermal states and their Hamiltonians.

A Lindblad generator ``L`` drives states, ``rho_t = exp(t L) rho``, and
induces on ``K = log rho`` the tangent field

    beta(K) = omega_inv(rho, L(rho)).

Tangent vectors are carried along by ``a_t = omega_inv(rho_t, exp(tL) omega(rho, a))``
whose infinitesimal form is the directional derivative of ``beta``
(:func:`nabla`). Because channels contract the Kubo-Mori metric, the norm of
any carried tangent vector is non-increasing, and so is the squared speed
``<beta, beta>_K``. The ``check_*`` functions evaluate these statements
numerically and return :class:`CertificateReport` records.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FlowDegeneracyError, LatticeError, RankDeficiencyError
from .geometry import (
    Picture,
    TangentVector,
    hamiltonian_norm2,
    metric_hamiltonians,
    metric_states,
    omega,
    omega_inv,
    free_energy,
    state_tangent,
)
from .operators import RANK_FLOOR, GibbsState, as_hermitian, gibbs_from_density, normalize_to_gibbs
from .superop import KrausChannel, LindbladGenerator

FD_STEP = 1e-4
POSITIVITY_SLACK = 1e-10


@dataclass
class CertificateReport:
    """Outcome of one numerical check: the quantities, the verdict, the slack used."""

    name: str
    values: dict
    passed: bool
    slack: float
    seed: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = {k: float(v) if isinstance(v, (float, np.floating)) else v
                       for k, v in self.values.items()}
        d["passed"] = bool(self.passed)
        return d


def _operator(a) -> np.ndarray:
    return a.operator if isinstance(a, TangentVector) else np.asarray(a, dtype=np.complex128)


def apply_generator(gen: LindbladGenerator, rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (gen.dim, gen.dim):
        raise ValueError(f"state of shape {rho.shape} does not match generator dim {gen.dim}")
    return as_hermitian(gen.apply(rho))


def _state_at(gen: LindbladGenerator, rho, t: float) -> GibbsState:
    rho_t = as_hermitian(gen.propagate(rho, t))
    lam = np.linalg.eigvalsh(rho_t)
    if lam[0] < -POSITIVITY_SLACK or lam[0] < RANK_FLOOR:
        raise FlowDegeneracyError(
            f"state left the full-rank manifold at t={t} (eigenvalue {lam[0]:.3e})", t)
    return gibbs_from_density(rho_t)


def evolve(gen: LindbladGenerator, state: GibbsState, t: float) -> GibbsState:
    """``exp(t L)`` applied to ``rho``, returned as a GibbsState."""
    if t < 0:
        raise ValueError("flow time must be non-negative")
    if t == 0:
        return state
    return _state_at(gen, state.rho, t)


def beta(gen: LindbladGenerator, state: GibbsState) -> TangentVector:
    """Tangent field ``omega_inv(rho, L(rho))`` of the Hamiltonian flow."""
    b = omega_inv(state, gen.apply(state.rho))
    return TangentVector(b, Picture.HAMILTONIAN, state)


def pushforward(gen: LindbladGenerator, state: GibbsState, a, t: float) -> TangentVector:
    """Image of the tangent ``a`` at ``K`` under the flow map, attached to ``K_t``."""
    a = _operator(a)
    if t == 0:
        return TangentVector(a, Picture.HAMILTONIAN, state)
    state_t = evolve(gen, state, t)
    x_t = gen.propagate(omega(state, a), t)
    return TangentVector(omega_inv(state_t, x_t), Picture.HAMILTONIAN, state_t)


def nabla(gen: LindbladGenerator, state: GibbsState, a, eps: float = FD_STEP) -> TangentVector:
    """Directional derivative of ``beta`` at ``K`` along ``a`` (central difference).

    The step is ``eps / ||a||``; this is the generator of the pushforward.
    """
    a = _operator(a)
    norm = np.linalg.norm(a, 2)
    if norm == 0:
        return TangentVector(np.zeros_like(a), Picture.HAMILTONIAN, state)
    h = eps / norm
    k = state.hamiltonian
    plus = beta(gen, normalize_to_gibbs(k + h * a)).operator
    minus = beta(gen, normalize_to_gibbs(k - h * a)).operator
    return TangentVector((plus - minus) / (2 * h), Picture.HAMILTONIAN, state)


def omega_dot(gen: LindbladGenerator, state: GibbsState, a, dt: float = FD_STEP) -> np.ndarray:
    """``d/dt omega(rho_t, a)`` at ``t = 0`` by a central difference in ``t``."""
    a = _operator(a)
    fwd = _state_at(gen, state.rho, dt)
    bwd = _state_at(gen, state.rho, -dt)
    return (omega(fwd, a) - omega(bwd, a)) / (2 * dt)


def tangent_norm_along_flow(gen, state: GibbsState, a, times) -> np.ndarray:
    """``<a_t, a_t>_{K_t}`` on a grid, via the state picture."""
    x = omega(state, _operator(a))
    out = []
    for t in times:
        st = _state_at(gen, state.rho, t) if t != 0 else state
        x_t = gen.propagate(x, t)
        out.append(float(np.real(np.sum(x_t.conj() * omega_inv(st, x_t)))))
    return np.array(out)


def check_contraction(channel: KrausChannel, state: GibbsState, x, seed=None,
                      slack: float = 1e-9) -> CertificateReport:
    """``<N(x), N(x)>_{N(rho)} <= <x, x>_rho`` for a Kraus channel ``N``."""
    channel.validate()
    x = x if isinstance(x, TangentVector) else state_tangent(x)
    image = gibbs_from_density(channel.apply(state.rho))
    nx = state_tangent(channel.apply(x.operator), strict=False)
    lhs = metric_states(image, nx, nx)
    rhs = metric_states(state, x, x)
    return CertificateReport("contraction", {"lhs": lhs, "rhs": rhs},
                             lhs <= rhs + slack, slack, seed)


def contract_identity_lhs(gen, state: GibbsState, a) -> float:
    """``2 <a, nabla a>_K + Tr(a omega_dot(a))``."""
    a = _operator(a)
    na = nabla(gen, state, a).operator
    first = float(np.real(np.sum(a.conj() * omega(state, na))))
    second = float(np.real(np.trace(a @ omega_dot(gen, state, a))))
    return 2 * first + second


def check_contract_identity(gen, state: GibbsState, a, seed=None,
                            slack: float = 1e-7) -> CertificateReport:
    """Infinitesimal contraction: the left-hand side must be non-positive."""
    if isinstance(a, TangentVector):
        a.check(state)
    lhs = contract_identity_lhs(gen, state, a)
    return CertificateReport("contract_identity", {"lhs": lhs}, lhs <= slack, slack, seed)


def speed(gen: LindbladGenerator, state: GibbsState) -> float:
    """Squared speed ``<beta(K), beta(K)>_K``."""
    b = beta(gen, state)
    return metric_hamiltonians(state, b, b)


def invariant_field_residual(field_fn, gen, state: GibbsState, dt: float) -> float:
    """``|| (A(K_dt) - A(K)) / dt - nabla A(K) ||_F`` for a tangent field ``A``."""
    a0 = _operator(field_fn(state))
    a1 = _operator(field_fn(evolve(gen, state, dt)))
    drift = nabla(gen, state, a0).operator
    return float(np.linalg.norm((a1 - a0) / dt - drift))


def generated_field(other_gen):
    """Field ``K -> omega_inv(rho, L'(rho))`` for a superoperator ``L'``."""
    def field_fn(state):
        return omega_inv(state, other_gen.apply(state.rho))
    return field_fn


def translation_commutator_norm(gen: LindbladGenerator, lattice, n_probe: int = 3) -> float:
    """Max over unit translations of ``||[L, T_x](X)|| / ||X||`` on random probes.

    A nonzero linear commutator is detected by random probes with
    probability one; the result is cached on the generator.
    """
    from .lattice import translation_operator

    key = ("translation_commutator", lattice, n_probe)
    if key in gen._cache:
        return gen._cache[key]
    rng = np.random.default_rng(12345)
    worst = 0.0
    for shift in lattice.unit_shifts():
        tr = translation_operator(lattice, shift)
        for _ in range(n_probe):
            x = rng.standard_normal((gen.dim, gen.dim)) + 1j * rng.standard_normal((gen.dim, gen.dim))
            diff = gen.apply(tr.apply(x)) - tr.apply(gen.apply(x))
            worst = max(worst, float(np.linalg.norm(diff) / np.linalg.norm(x)))
    gen._cache[key] = worst
    return worst


def translation_defect(state: GibbsState, lattice) -> float:
    from .lattice import translation_operator

    rho = state.rho
    return max(float(np.max(np.abs(translation_operator(lattice, s).apply(rho) - rho)))
               for s in lattice.unit_shifts())


def speed_density_exact(gen: LindbladGenerator, state: GibbsState, lattice) -> float:
    """Speed per site, ``speed / N``, for translation-covariant flows on periodic lattices."""
    if lattice.hilbert_dim != gen.dim:
        raise LatticeError("lattice does not match the generator dimension")
    comm = translation_commutator_norm(gen, lattice)
    if comm > 1e-10:
        raise LatticeError(f"generator does not commute with translations (norm {comm:.3e})")
    defect = translation_defect(state, lattice)
    if defect > 1e-9:
        raise LatticeError(f"state is not translation invariant (defect {defect:.3e})")
    return speed(gen, state) / lattice.n_sites


@dataclass(frozen=True)
class FlowTrajectory:
    times: np.ndarray
    states: tuple
    free_energy: np.ndarray
    speed: np.ndarray
    speed_density: np.ndarray
    monotone_violation: np.ndarray
    slack: float = 1e-8

    CSV_COLUMNS = ("t", "free_energy", "speed", "speed_density", "monotone_violation_flag")

    def rows(self) -> list:
        return [
            {"t": float(t), "free_energy": float(f), "speed": float(s),
             "speed_density": float(d), "monotone_violation_flag": int(v)}
            for t, f, s, d, v in zip(self.times, self.free_energy, self.speed,
                                     self.speed_density, self.monotone_violation)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for row in self.rows():
            writer.writerow([repr(row[c]) for c in self.CSV_COLUMNS])
        return buf.getvalue()


def flow_trajectory(gen: LindbladGenerator, state0: GibbsState, times, lattice=None,
                    slack: float = 1e-8) -> FlowTrajectory:
    """Evaluate the flow on an ascending time grid.

    ``speed_density`` is NaN when no periodic lattice is given.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be a nonempty ascending grid of non-negative values")
    states, fe, sp, dens = [], [], [], []
    for t in times:
        st = evolve(gen, state0, t)
        s = speed(gen, st)
        states.append(st)
        fe.append(free_energy(st))
        sp.append(s)
        dens.append(speed_density_exact(gen, st, lattice) if lattice is not None else np.nan)
    sp = np.array(sp)
    viol = np.zeros(len(times), dtype=bool)
    viol[1:] = sp[1:] > sp[:-1] + slack
    return FlowTrajectory(times, tuple(states), np.array(fe), sp, np.array(dens), viol, slack)
