import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import SX, SZ
import igrg.superop as superop
from igrg.errors import ChannelError
from igrg.lattice import LatticeSpec, swap_generator
from igrg.operators import random_density, random_hermitian
from igrg.superop import (
    KrausChannel,
    lindblad_from_jumps,
    random_channel,
    random_unitary,
    replace_channel,
    unitary_channel,
)

seeds = st.integers(0, 2**31 - 1)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


def _damping_generator():
    return lindblad_from_jumps(0.3 * SX, [SIGMA_MINUS, 0.5 * SZ])


@given(seed=seeds)
def test_matrix_matches_term_application(seed):
    rng = np.random.default_rng(seed)
    gen = lindblad_from_jumps(random_hermitian(3, rng), [rng.standard_normal((3, 3))])
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    via_matrix = (gen.matrix @ x.reshape(-1)).reshape(3, 3)
    assert np.max(np.abs(via_matrix - gen.apply(x))) <= 1e-12


@given(seed=seeds)
def test_adjoint_is_hilbert_schmidt_dual(seed):
    rng = np.random.default_rng(seed)
    gen = lindblad_from_jumps(random_hermitian(3, rng), [rng.standard_normal((3, 3))])
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    lhs = np.trace(x.conj().T @ gen.apply(y))
    rhs = np.trace(gen.adjoint().apply(x).conj().T @ y)
    assert abs(lhs - rhs) <= 1e-10


@given(seed=seeds)
def test_generators_are_trace_annihilating(seed):
    rho = random_density(4, seed)
    assert swap_generator(LatticeSpec.chain(2)).trace_defect(rho) <= 1e-14
    assert _damping_generator().trace_defect(random_density(2, seed)) <= 1e-14


def test_propagate_zero_time_is_identity():
    x = random_density(4, 0)
    assert np.array_equal(swap_generator(LatticeSpec.chain(2)).propagate(x, 0.0), x)


def test_propagate_matches_expm_for_non_selfadjoint():
    import scipy.linalg as la
    gen = _damping_generator()
    x = random_density(2, 1)
    ref = (la.expm(0.7 * gen.matrix) @ x.reshape(-1)).reshape(2, 2)
    assert np.max(np.abs(gen.propagate(x, 0.7) - ref)) <= 1e-13


@pytest.mark.parametrize("make", [lambda: swap_generator(LatticeSpec.ring(3)), _damping_generator])
def test_rk4_path_matches_dense(monkeypatch, make):
    gen = make()
    x = random_density(gen.dim, 5)
    dense = gen.propagate(x, 1.3)
    monkeypatch.setattr(superop, "DENSE_PROPAGATOR_MAX_DIM", 0)
    rk = make().propagate(x, 1.3)
    assert np.max(np.abs(rk - dense)) <= 1e-7


def test_channel_validation():
    ch = random_channel(4, 3, 0)
    ch.validate()
    bad = KrausChannel(tuple(1.1 * k for k in ch.kraus))
    with pytest.raises(ChannelError):
        bad.validate()
    with pytest.raises(ChannelError):
        KrausChannel(())


@given(seed=seeds)
def test_channels_preserve_states(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng)
    for ch in (random_channel(4, 2, rng), unitary_channel(random_unitary(4, rng)),
               replace_channel(2, 2, random_density(2, rng))):
        ch.validate()
        out = ch.apply(rho)
        assert abs(np.trace(out) - 1) <= 1e-12
        assert np.linalg.eigvalsh(out).min() >= -1e-12


def test_replace_channel_structure():
    ra, rb, tau = random_density(2, 1), random_density(2, 2), random_density(2, 3)
    out = replace_channel(2, 2, tau).apply(np.kron(ra, rb))
    assert np.allclose(out, np.kron(ra, tau))
