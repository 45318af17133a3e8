import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlestates.errors import ProtocolMismatchError, TruncationError, UsageError
from circlestates.protocol import (
    ProtocolParams,
    carrier_validity_ratio,
    circle_probability,
    kappa_squared,
    line_probability,
    plan_sequence,
    run_sequence_oracle,
    step2_state,
    step2_state_operator,
    target_orientation,
)
from circlestates.states import (
    SuperpositionSpec,
    coherent_vector,
    normalization_constant,
    number_vector,
)

PARAMS = ProtocolParams()


def test_params_derived_quantities():
    p = ProtocolParams(phi_b=1.0, phi_r=0.4)
    assert p.Omega == pytest.approx(0.2 * math.pi)
    assert p.theta == pytest.approx(0.3)
    assert p.varphi == pytest.approx(0.7)
    assert p.beta_at(2.0) == pytest.approx(1j * p.Omega * 2.0 * np.exp(-0.3j))
    with pytest.raises(UsageError):
        ProtocolParams(Lambda=0)


def test_kappa_values():
    assert kappa_squared(0, 1) == pytest.approx(1 / 8)
    assert kappa_squared(2, 2) == pytest.approx(1 / 18)


def test_line_probability_limits():
    assert line_probability(3, 0.0) == 1.0
    assert line_probability(1, 8.0) == pytest.approx(0.5, abs=1e-12)
    b = 1.27
    expect = 0.5 * (1 + math.exp(-2 * b * b) * (1 - 8 * b * b + 8 * b**4))
    assert line_probability(2, b) == pytest.approx(expect, rel=1e-13)


@given(n=st.integers(0, 4), ell=st.integers(1, 3), b=st.floats(0.0, 4.0))
def test_circle_probability_norm_identity(n, ell, b):
    # N^2 P_up = 2^{-2(l+1)} with N the normalization of the target state
    N = 2 ** (ell + 1)
    Nn = normalization_constant(SuperpositionSpec(n, N, b, 0.0))
    assert Nn**2 * circle_probability(n, ell, b) == pytest.approx(2.0 ** (-2 * (ell + 1)), rel=1e-10)


def test_circle_probability_limits():
    assert circle_probability(2, 2, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert circle_probability(1, 1, 10.0) == pytest.approx(0.25, abs=1e-12)
    assert circle_probability(0, 0, 1.3) == pytest.approx(line_probability(0, 1.3), rel=1e-13)
    with pytest.raises(UsageError):
        circle_probability(0, -1, 1.0)


def test_plan_single_cycle_vacuum():
    plan = plan_sequence(PARAMS, 0, 1, 1j)
    assert plan.T == pytest.approx(1.0, rel=1e-14)
    assert plan.T_sum == pytest.approx(plan.T, rel=1e-14)
    assert plan.tau == pytest.approx(1 / PARAMS.Omega)
    assert plan.T_t == pytest.approx(plan.T + 200 + plan.tau + 200)


@given(n=st.integers(0, 6), ell=st.integers(0, 5), b=st.floats(0, 5))
def test_plan_pulse_sum_identity(n, ell, b):
    plan = plan_sequence(PARAMS, n, ell, b)
    assert plan.T_sum == pytest.approx(plan.T, rel=1e-12, abs=1e-12)
    assert len(plan.pulse_durations) == ell
    assert all(a == pytest.approx(2 * c) for a, c in zip(plan.pulse_durations, plan.pulse_durations[1:]))


def test_step2_zero_displacement():
    up, down = step2_state(2, 0.0, 0.3, 8)
    np.testing.assert_allclose(up.amps, number_vector(2, 8).amps)
    np.testing.assert_allclose(down.amps, 0)


@pytest.mark.parametrize("n,beta", [(0, 1.5j), (1, 0.8 + 0.6j), (2, 3.03j)])
def test_step2_branch_norm_is_line_probability(n, beta):
    up, down = step2_state(n, beta, 0.0, 80)
    assert up.norm2 == pytest.approx(float(line_probability(n, abs(beta))), abs=1e-12)
    assert up.norm2 + down.norm2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,beta,varphi", [(0, 1.5j, 0.0), (1, 0.8 + 0.6j, 0.4), (2, -2.2 + 1.0j, 1.1)])
def test_step2_against_operator_oracle(n, beta, varphi):
    dim = 60
    up, down = step2_state(n, beta, varphi, dim)
    up_o, down_o = step2_state_operator(n, beta, varphi, dim)
    assert np.abs(up.amps - up_o.amps).max() <= 1e-8
    assert np.abs(down.amps - down_o.amps).max() <= 1e-8


def test_step2_truncation():
    with pytest.raises(TruncationError) as info:
        step2_state(2, 3.03j, 0.0, 12)
    assert info.value.required_dim > 12
    step2_state(2, 3.03j, 0.0, info.value.required_dim)


def test_carrier_validity_examples():
    assert carrier_validity_ratio(number_vector(1, 6), 0.5) == 0.0
    b = 1.3
    assert carrier_validity_ratio(coherent_vector(b, 60), 0.5) == pytest.approx(0.25 * b * b / 4, rel=1e-10)
    assert carrier_validity_ratio(number_vector(2, 6), 0.25) == pytest.approx(1 / 64)
    with pytest.raises(UsageError):
        carrier_validity_ratio(number_vector(0, 6), 0.5)


def test_target_orientation():
    assert target_orientation(2j, 0) == pytest.approx(math.pi / 2)
    assert target_orientation(2j, 1) == pytest.approx(math.pi / 2 + math.pi / 4)
    assert target_orientation(0, 2) == pytest.approx(math.pi / 8)


def test_sequence_zero_displacement():
    r = run_sequence_oracle(PARAMS, 1, 2, 0.0)
    assert r.fidelity == pytest.approx(1.0, abs=1e-12)
    assert r.total_probability == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("ell", [1, 2])
@pytest.mark.parametrize("n", [0, 1, 2])
@pytest.mark.parametrize("b", [1.0, 3.03])
def test_sequence_reaches_target(ell, n, b):
    r = run_sequence_oracle(PARAMS, n, ell, 1j * b)
    assert 1 - r.fidelity <= 1e-8
    assert r.total_probability == pytest.approx(circle_probability(n, ell, b), rel=1e-9)


@settings(max_examples=15)
@given(n=st.integers(0, 3), ell=st.integers(1, 3), b=st.floats(0.2, 3.0), ang=st.floats(-math.pi, math.pi))
def test_sequence_rotation_covariant(n, ell, b, ang):
    r = run_sequence_oracle(PARAMS, n, ell, b * np.exp(1j * ang))
    assert 1 - r.fidelity <= 1e-8


def test_sequence_mismatch_is_reported():
    wrong = ProtocolParams(Lambda=3.0)
    # pulse durations still scale with Lambda, so a mismatch needs a broken target
    r = run_sequence_oracle(wrong, 1, 1, 2j, min_fidelity=0.0)
    assert r.fidelity == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ProtocolMismatchError):
        run_sequence_oracle(PARAMS, 1, 1, 2j, min_fidelity=1.5)
