"""Batch of numerical certificates run by ``igrg --command verify``."""
from __future__ import annotations

import numpy as np

from .errors import ChannelError, NumericalError
from .flow import (
    CertificateReport,
    beta,
    check_contract_identity,
    check_contraction,
    flow_trajectory,
    translation_commutator_norm,
)
from .geometry import (
    hamiltonian_tangent,
    metric_hamiltonians,
    metric_hamiltonians_fd,
    metric_states,
    metric_states_fd,
    omega,
    omega_inv,
    state_tangent,
)
from .lattice import LatticeSpec, random_translation_invariant_state, swap_generator
from .operators import random_gibbs, random_hermitian
from .superop import KrausChannel, random_channel, replace_channel


def _rel(a, b, scale):
    return abs(a - b) / max(scale, 1e-300)


def geometry_certificates(seed: int, n_per_dim: int = 3) -> list:
    reports = []
    for dim in (2, 4, 8):
        for k in range(n_per_dim):
            s = seed * 1000 + dim * 10 + k
            rng = np.random.default_rng(s)
            st = random_gibbs(dim, rng)
            x = random_hermitian(dim, rng)
            err = float(np.max(np.abs(omega(st, omega_inv(st, x)) - x)))
            reports.append(CertificateReport(f"omega_roundtrip_d{dim}", {"max_error": err},
                                             err <= 1e-9, 1e-9, s))
            a = hamiltonian_tangent(st, random_hermitian(dim, rng))
            b = hamiltonian_tangent(st, random_hermitian(dim, rng))
            exact = metric_hamiltonians(st, a, b)
            fd = metric_hamiltonians_fd(st, a, b)
            scale = np.sqrt(metric_hamiltonians(st, a, a) * metric_hamiltonians(st, b, b))
            r = _rel(exact, fd, scale)
            reports.append(CertificateReport(f"metric_hamiltonians_fd_d{dim}",
                                             {"exact": exact, "fd": fd, "rel_error": r},
                                             r <= 1e-4, 1e-4, s))
            x = state_tangent(random_hermitian(dim, rng))
            y = state_tangent(random_hermitian(dim, rng))
            exact = metric_states(st, x, y)
            fd = metric_states_fd(st, x, y)
            scale = np.sqrt(metric_states(st, x, x) * metric_states(st, y, y))
            r = _rel(exact, fd, scale)
            reports.append(CertificateReport(f"metric_states_fd_d{dim}",
                                             {"exact": exact, "fd": fd, "rel_error": r},
                                             r <= 1e-4, 1e-4, s))
    return reports


def contraction_certificates(seed: int, n: int = 10) -> list:
    reports = []
    for k in range(n):
        s = seed * 1000 + 500 + k
        rng = np.random.default_rng(s)
        st = random_gibbs(4, rng)
        x = state_tangent(random_hermitian(4, rng))
        ch = random_channel(4, 2 + k % 3, rng)
        reports.append(check_contraction(ch, st, x, seed=s))
    lat = LatticeSpec.chain(2)
    for k in range(3):
        s = seed * 1000 + 600 + k
        rng = np.random.default_rng(s)
        st = random_gibbs(4, rng)
        tau = random_gibbs(2, rng).rho
        x = state_tangent(random_hermitian(4, rng))
        rep = check_contraction(replace_channel(2, 2, tau), st, x, seed=s)
        rep.name = "contraction_replace"
        reports.append(rep)
    gen = swap_generator(lat)
    for k in range(3):
        s = seed * 1000 + 700 + k
        rng = np.random.default_rng(s)
        st = random_gibbs(4, rng)
        a = hamiltonian_tangent(st, random_hermitian(4, rng))
        reports.append(check_contract_identity(gen, st, a, seed=s))
    return reports


def flow_certificates(seed: int) -> list:
    lat = LatticeSpec.ring(4)
    gen = swap_generator(lat)
    comm = translation_commutator_norm(gen, lat)
    reports = [CertificateReport("swap_translation_commutator", {"norm": comm},
                                 comm <= 1e-10, 1e-10, None)]
    st = random_translation_invariant_state(lat, seed)
    b = beta(gen, st)
    tangency = abs(st.expectation(b.operator))
    reports.append(CertificateReport("beta_tangency", {"abs_expectation": tangency},
                                     tangency <= 1e-9, 1e-9, seed))
    traj = flow_trajectory(gen, st, np.round(np.arange(0, 1.01, 0.1), 10), lat)
    reports.append(CertificateReport("speed_monotone_ring4",
                                     {"speed_t0": float(traj.speed[0]),
                                      "speed_t1": float(traj.speed[-1]),
                                      "violations": int(traj.monotone_violation.sum())},
                                     not traj.monotone_violation.any(), traj.slack, seed))
    return reports


def faulty_channel_certificate(seed: int) -> CertificateReport:
    rng = np.random.default_rng(seed)
    st = random_gibbs(4, rng)
    x = state_tangent(random_hermitian(4, rng))
    bad = KrausChannel(tuple(1.1 * k for k in random_channel(4, 2, rng).kraus))
    try:
        return check_contraction(bad, st, x, seed=seed)
    except ChannelError as exc:
        return CertificateReport("faulty_channel", {"error": str(exc)}, False, 1e-10, seed)


def run_suite(seed: int = 0, inject_fault: bool = False) -> list:
    reports = []
    for build in (geometry_certificates, contraction_certificates, flow_certificates):
        try:
            reports.extend(build(seed))
        except NumericalError as exc:
            reports.append(CertificateReport(build.__name__, {"error": str(exc)}, False, 0.0, seed))
    if inject_fault:
        reports.append(faulty_channel_certificate(seed))
    return reports
