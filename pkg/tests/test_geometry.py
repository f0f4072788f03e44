import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import SX, SZ
from oracles import kl_divergence, omega_inv_quadrature, omega_quadrature
from igrg.errors import PictureError
from igrg.geometry import (
    Picture,
    TangentVector,
    free_energy,
    hamiltonian_tangent,
    metric_hamiltonians,
    metric_hamiltonians_fd,
    metric_states,
    metric_states_fd,
    omega,
    omega_inv,
    relative_entropy,
    state_tangent,
)
from igrg.operators import gibbs_from_density, normalize_to_gibbs, random_gibbs, random_hermitian

seeds = st.integers(0, 2**31 - 1)
dims = st.sampled_from([2, 3, 4, 8])

# log-mean of (0.8, 0.2) and its reciprocal
OMEGA_08 = 0.432808512267
OMEGA_INV_08 = 2.310490601866

MIXED = gibbs_from_density(np.eye(2) / 2)
SKEWED = gibbs_from_density(np.diag([0.8, 0.2]))


def test_frozen_constants_against_quadrature():
    s = np.linspace(0, 1, 10001)
    assert abs(np.trapezoid(0.8 ** s * 0.2 ** (1 - s), s) - OMEGA_08) < 1e-8
    u = np.concatenate([[0.0], np.logspace(-10, 6, 200001)])
    quad = np.trapezoid(1 / ((0.8 + u) * (0.2 + u)), u) + 1e-6
    assert abs(quad - OMEGA_INV_08) < 1e-6


def test_omega_commuting_cases():
    assert np.allclose(omega(MIXED, SX), SX / 2)
    assert np.allclose(omega(SKEWED, SZ), np.diag([0.8, -0.2]))
    assert np.allclose(omega_inv(MIXED, SX), 2 * SX)


def test_omega_skewed_off_diagonal():
    assert np.allclose(omega(SKEWED, SX), OMEGA_08 * SX, atol=1e-12)
    assert np.allclose(omega_inv(SKEWED, SX), OMEGA_INV_08 * SX, atol=1e-11)


@pytest.mark.parametrize("seed", [0, 1])
def test_omega_matches_integral_definition(seed):
    st_ = random_gibbs(4, seed, scale=2.0)
    a = random_hermitian(4, seed + 100)
    assert np.max(np.abs(omega(st_, a) - omega_quadrature(st_.rho, a))) <= 1e-7
    x = random_hermitian(4, seed + 200)
    ref = omega_inv_quadrature(st_.rho, x)
    assert np.max(np.abs(omega_inv(st_, x) - ref)) <= 1e-5 * np.max(np.abs(ref))


@given(seed=seeds, dim=st.integers(1, 16), scale=st.floats(0.1, 6.0))
def test_omega_roundtrip(seed, dim, scale):
    st_ = random_gibbs(dim, seed, scale)
    a = random_hermitian(dim, seed + 1)
    assert np.max(np.abs(omega_inv(st_, omega(st_, a)) - a)) <= 1e-9
    assert np.max(np.abs(omega(st_, omega_inv(st_, a)) - a)) <= 1e-9


@given(seed=seeds, dim=dims)
def test_omega_trace_and_hermiticity(seed, dim):
    st_ = random_gibbs(dim, seed)
    a = random_hermitian(dim, seed + 1)
    out = omega(st_, a)
    assert np.array_equal(out, out.conj().T)
    assert abs(np.trace(out) - np.trace(st_.rho @ a)) <= 1e-12


def test_kernel_continuous_across_degeneracy():
    a = random_hermitian(2, 4)
    for p in (0.5, 0.3, 1e-3):
        exact = gibbs_from_density(np.diag([p, p]) / (2 * p))
        near = gibbs_from_density(np.diag([1.0 + 1e-9, 1.0]) / (2 + 1e-9))
        assert np.max(np.abs(omega(exact, a) - omega(near, a))) <= 1e-6
    p = np.array([0.3, 0.3 + 1e-9, 0.4 - 1e-9])
    v = np.linalg.qr(random_hermitian(3, 9) + 2j * np.eye(3))[0]
    near = gibbs_from_density(v @ np.diag(p) @ v.conj().T)
    exact = gibbs_from_density(v @ np.diag([0.3, 0.3, 0.4]) @ v.conj().T)
    b = random_hermitian(3, 10)
    assert np.max(np.abs(omega_inv(near, b) - omega_inv(exact, b))) <= 1e-6


def test_free_energy_examples():
    assert abs(free_energy(np.zeros((2, 2))) + 0.693147) < 1e-6
    assert abs(free_energy(np.diag([1.0, 0.0])) + 1.313262) < 1e-6
    assert abs(free_energy(random_gibbs(6, 2))) <= 1e-10


def test_relative_entropy_examples():
    st_ = random_gibbs(4, 3)
    assert abs(relative_entropy(st_, st_)) <= 1e-12
    a = gibbs_from_density(np.diag([0.9, 0.1]))
    b = gibbs_from_density(np.diag([0.5, 0.5]))
    assert abs(relative_entropy(a, b) - 0.368064) < 1e-6
    assert abs(relative_entropy(a, b) - kl_divergence([0.9, 0.1], [0.5, 0.5])) < 1e-14


@given(seed=seeds, dim=dims)
def test_klein_inequality(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_gibbs(dim, rng, 2.0)
    b = random_gibbs(dim, rng, 2.0)
    assert relative_entropy(a, b) >= -1e-12


def test_relative_entropy_commuting_is_kl():
    p, q = np.array([0.2, 0.5, 0.3]), np.array([0.6, 0.1, 0.3])
    u = np.linalg.qr(random_hermitian(3, 1) + 1j * np.eye(3))[0]
    a = gibbs_from_density(u @ np.diag(p) @ u.conj().T)
    b = gibbs_from_density(u @ np.diag(q) @ u.conj().T)
    assert abs(relative_entropy(a, b) - kl_divergence(p, q)) < 1e-12


def test_metric_examples():
    k = normalize_to_gibbs(np.zeros((2, 2)))
    a = hamiltonian_tangent(k, SX)
    assert abs(metric_hamiltonians(k, a, a) - 1.0) < 1e-14
    x = state_tangent(SX / 2)
    assert abs(metric_states(k, x, x) - 1.0) < 1e-14


def _cs_error(exact, fd, scale):
    return abs(exact - fd) / scale


@given(seed=seeds, dim=dims)
def test_metric_hamiltonians_finite_difference(seed, dim):
    rng = np.random.default_rng(seed)
    st_ = random_gibbs(dim, rng)
    a = hamiltonian_tangent(st_, random_hermitian(dim, rng))
    b = hamiltonian_tangent(st_, random_hermitian(dim, rng))
    exact = metric_hamiltonians(st_, a, b)
    scale = np.sqrt(metric_hamiltonians(st_, a, a) * metric_hamiltonians(st_, b, b))
    assert _cs_error(exact, metric_hamiltonians_fd(st_, a, b), scale) <= 1e-4
    assert abs(exact - metric_hamiltonians(st_, b, a)) <= 1e-12


@given(seed=seeds, dim=dims)
def test_metric_states_finite_difference(seed, dim):
    rng = np.random.default_rng(seed)
    st_ = random_gibbs(dim, rng)
    x = state_tangent(random_hermitian(dim, rng))
    y = state_tangent(random_hermitian(dim, rng))
    exact = metric_states(st_, x, y)
    scale = np.sqrt(metric_states(st_, x, x) * metric_states(st_, y, y))
    assert _cs_error(exact, metric_states_fd(st_, x, y), scale) <= 1e-4
    assert abs(exact - metric_states(st_, y, x)) <= 1e-12


@given(seed=seeds, dim=dims)
def test_metrics_positive_and_dual(seed, dim):
    rng = np.random.default_rng(seed)
    st_ = random_gibbs(dim, rng, 2.0)
    a = hamiltonian_tangent(st_, random_hermitian(dim, rng))
    b = hamiltonian_tangent(st_, random_hermitian(dim, rng))
    assert metric_hamiltonians(st_, a, a) > 0
    # omega maps the Hamiltonian metric onto the state metric
    x = state_tangent(omega(st_, a.operator))
    y = state_tangent(omega(st_, b.operator))
    assert np.isclose(metric_states(st_, x, y), metric_hamiltonians(st_, a, b), rtol=1e-9, atol=1e-12)
    assert metric_states(st_, x, x) > 0


def test_classical_fisher_rao():
    p = np.array([0.1, 0.3, 0.6])
    st_ = gibbs_from_density(np.diag(p))
    x = state_tangent(np.diag([0.05, -0.02, -0.03]))
    assert np.isclose(metric_states(st_, x, x), np.sum(np.diag(x.operator).real ** 2 / p))


def test_picture_mismatch_raises():
    st_ = random_gibbs(2, 0)
    a = hamiltonian_tangent(st_, SX)
    x = state_tangent(SX)
    with pytest.raises(PictureError):
        metric_hamiltonians(st_, a, x)
    with pytest.raises(PictureError):
        metric_states(st_, x, a)
    with pytest.raises(PictureError):
        metric_states(st_, SX, SX)


def test_constraint_violations_raise():
    st_ = random_gibbs(2, 0)
    with pytest.raises(PictureError):
        TangentVector(np.eye(2), Picture.STATE, strict=True)
    with pytest.raises(PictureError):
        TangentVector(SZ + np.eye(2), Picture.HAMILTONIAN, st_, strict=True)
    loose = TangentVector(SZ + np.eye(2), Picture.HAMILTONIAN, st_)
    with pytest.raises(PictureError):
        metric_hamiltonians(st_, loose, loose)
