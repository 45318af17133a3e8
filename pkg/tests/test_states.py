import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from circlestates.errors import TruncationError, UsageError
from circlestates.states import (
    SuperpositionSpec,
    build_fock_vector,
    coherent_vector,
    default_dim,
    displaced_number_overlap,
    normalization_constant,
    number_vector,
    required_dim,
    unnormalized_amplitudes,
)


def displacement_matrix(beta, dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return expm(beta * a.T - np.conj(beta) * a)


def test_spec_defaults_and_validation():
    s = SuperpositionSpec(1, 4, 2.0)
    assert s.theta1 == pytest.approx(math.pi / 2)
    np.testing.assert_allclose(s.phases, 2 * math.pi * np.arange(1, 5) / 4)
    assert s.half_angle == pytest.approx(math.pi / 4)
    assert s.ell == 1
    assert SuperpositionSpec(0, 3, 1.0).ell is None
    for bad in [(-1, 2, 1.0), (0, 0, 1.0), (0, 2, -0.1)]:
        with pytest.raises(UsageError):
            SuperpositionSpec(*bad)
    assert SuperpositionSpec.from_cycles(2, 2, 3.03).N == 8


@pytest.mark.parametrize("n,N", [(0, 1), (3, 5), (2, 8)])
def test_normalization_zero_radius(n, N):
    assert normalization_constant(SuperpositionSpec(n, N, 0.0)) == pytest.approx(1 / N, rel=1e-15)


def test_normalization_single_component():
    assert normalization_constant(SuperpositionSpec(0, 1, 2.0)) == 1.0


def test_normalization_against_fock_norm():
    spec = SuperpositionSpec(2, 4, 3.03)
    dim = 64
    vec = sum(displacement_matrix(b, 2 * dim)[:dim, 2] for b in spec.betas)
    assert normalization_constant(spec) == pytest.approx(1 / np.linalg.norm(vec), rel=1e-10)


@given(n=st.integers(0, 4), N=st.sampled_from([1, 2, 4, 8]), b=st.floats(0, 3.5), th=st.floats(-4, 4))
def test_normalization_invariant(n, N, b, th):
    spec = SuperpositionSpec(n, N, b, th)
    big = default_dim(spec) + 30
    norm2 = np.sum(np.abs(unnormalized_amplitudes(spec, big)) ** 2)
    assert normalization_constant(spec) ** 2 * norm2 == pytest.approx(1.0, abs=1e-9)
    assert normalization_constant(spec) == pytest.approx(normalization_constant(SuperpositionSpec(n, N, b)), rel=1e-12)


def test_overlap_trivial_cases():
    m = np.arange(6)
    np.testing.assert_array_equal(displaced_number_overlap(m, 3, 0), np.eye(6)[3])
    beta = 0.8 - 0.3j
    assert displaced_number_overlap(0, 0, beta) == pytest.approx(math.exp(-abs(beta) ** 2 / 2))


@pytest.mark.parametrize("n,beta", [(0, 1.2), (3, 0.7 - 1.1j), (5, -2.0 + 1.5j)])
def test_overlap_against_matrix_exponential(n, beta):
    dim = 90
    D = displacement_matrix(beta, dim)
    np.testing.assert_allclose(displaced_number_overlap(np.arange(40), n, beta), D[:40, n], atol=1e-12)


@given(n=st.integers(0, 5), r=st.floats(0, 3), ang=st.floats(0, 2 * math.pi))
def test_overlap_unitarity(n, r, ang):
    amps = displaced_number_overlap(np.arange(128), n, r * np.exp(1j * ang))
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_coherent_expansion():
    beta = 1.7
    v = build_fock_vector(SuperpositionSpec(0, 1, beta, 0.0), 32)
    m = np.arange(32)
    ref = beta**m * math.exp(-beta**2 / 2) / np.sqrt([float(math.factorial(int(k))) for k in m])
    np.testing.assert_allclose(v.amps, ref, atol=1e-14)
    np.testing.assert_allclose(coherent_vector(beta, 32).amps, ref, atol=1e-14)


def test_parity_of_two_component_state():
    # D(b) + D(-b) keeps the parity of |1>, so only odd Fock levels survive
    spec = SuperpositionSpec(1, 2, 1.0, 0.0)
    v = build_fock_vector(spec, 48)
    brute = displacement_matrix(1.0, 96)[:48, 1] + displacement_matrix(-1.0, 96)[:48, 1]
    brute /= np.linalg.norm(brute)
    np.testing.assert_allclose(v.amps, brute, atol=1e-12)
    assert np.all(np.abs(v.amps[0::2]) < 1e-15)
    # <1|D(b)|1> = e^{-b^2/2}(1-b^2) vanishes at |b| = 1
    assert abs(v.amps[1]) < 1e-15
    assert abs(v.amps[3]) > 1e-2 and abs(v.amps[5]) > 1e-3


def test_zero_radius_is_number_state():
    v = build_fock_vector(SuperpositionSpec(3, 4, 0.0), 10)
    np.testing.assert_allclose(v.amps, number_vector(3, 10).amps)


def test_truncation_rule_and_error():
    spec = SuperpositionSpec(2, 8, 3.03)
    v = build_fock_vector(spec)
    assert v.loss <= 1e-10
    with pytest.raises(TruncationError) as info:
        build_fock_vector(spec, 20)
    assert info.value.required_dim == required_dim(spec)
    assert "increase dim to at least" in str(info.value)
    assert build_fock_vector(spec, info.value.required_dim).loss <= 1e-8
    with pytest.raises(TruncationError):
        build_fock_vector(spec, 2)


def test_norm_monotone_in_dim():
    spec = SuperpositionSpec(1, 4, 2.5)
    losses = [build_fock_vector(spec, d, max_loss=1.0).loss for d in range(4, 60, 4)]
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_fock_vector_is_immutable_and_moments():
    v = build_fock_vector(SuperpositionSpec(0, 1, 1.5, 0.0), 60)
    with pytest.raises(ValueError):
        v.amps[0] = 1
    assert v.factorial_moment(1) == pytest.approx(1.5**2, rel=1e-10)
    assert v.factorial_moment(2) == pytest.approx(1.5**4, rel=1e-10)
    np.testing.assert_allclose(v.density(), np.outer(v.amps, v.amps.conj()))
