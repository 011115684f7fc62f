import numpy as np
import pytest

from conftest import cosine_state
from datagen import curvature_from_support
from errors import DomainError
from normalizer import (
    NormalizedState,
    integrate_normalized,
    linear_spectrum,
    normalize,
    normalize_trajectory,
    rhs_normalized,
    scale_factor,
    t_of_tau,
    tau_of_t,
)
from params import FlowParams, IntegratorOptions, SupportSpec
from spectral_core import constant_state, convexity_functional_Q, make_mode_set, random_symmetric_state


def test_tau_of_t():
    T, p = 0.5, 1
    assert tau_of_t(0.0, T, p) == 0.0
    assert tau_of_t(T * (1 - np.exp(-(p + 1))), T, p) == pytest.approx(1.0, rel=1e-14)
    t = 0.4321
    assert t_of_tau(tau_of_t(t, T, p), T, p) == pytest.approx(t, rel=1e-14)


@pytest.mark.parametrize("t", [0.5, 0.7])
def test_tau_of_t_rejects_t_past_T(t):
    with pytest.raises(DomainError):
        tau_of_t(t, 0.5, 1)
    with pytest.raises(DomainError):
        t_of_tau(-0.1, 0.5, 1)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_round_solution_normalizes_to_one(p):
    T = p / (p + 1)
    t = 0.6 * T
    k0 = (1 - (p + 1) / p * t) ** (-1 / (p + 1))
    normalized = normalize(constant_state(make_mode_set(3), k0, t), T, FlowParams(p=p, N=3))
    assert normalized.state.mean == pytest.approx(1.0, rel=1e-13)
    assert normalized.tau == pytest.approx(tau_of_t(t, T, p))
    assert normalized.state.time_stamp == normalized.tau


def test_normalize_rejects_t_at_T():
    with pytest.raises(DomainError):
        normalize(constant_state(make_mode_set(1), 1.0, 0.5), 0.5, FlowParams(p=1, N=1))


def test_normalized_state_validation():
    with pytest.raises(DomainError):
        NormalizedState(constant_state(make_mode_set(1), 1.0), -0.1)
    with pytest.raises(DomainError):
        NormalizedState(constant_state(make_mode_set(1), -1.0), 0.0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_fixed_point(p):
    out = rhs_normalized(constant_state(make_mode_set(4), 1.0), FlowParams(p=p, N=4))
    assert np.max(np.abs(out.coeffs)) < 1e-14


@pytest.mark.parametrize("p", [1, 2, 3])
def test_linear_spectrum(p):
    spectrum = linear_spectrum(FlowParams(p=p, N=4))
    assert sorted(spectrum) == [0, 1, 2, 3]
    for n, value in spectrum.items():
        assert value == pytest.approx(-p * n * n + p + 1, abs=1e-6)
    # the mode-2 eigenvalue is minus the headline rate
    assert spectrum[2] == pytest.approx(-(3 * p - 1), abs=1e-6)


def test_linear_spectrum_skips_modes_beyond_N():
    assert sorted(linear_spectrum(FlowParams(p=1, N=1))) == [0, 1]


def test_integrate_normalized_stays_at_fixed_point():
    params = FlowParams(p=1, N=4)
    start = NormalizedState(constant_state(make_mode_set(4), 1.0), 0.0)
    taus = [0.0, 0.25, 0.5, 1.0]
    traj = integrate_normalized(start, params, IntegratorOptions(), 1.0, sample_at=taus)
    assert traj.domain_tag == "normalized_tau"
    assert list(traj.times()) == taus
    np.testing.assert_allclose(traj.means(), 1.0, atol=1e-12)


def test_perturbation_decays_at_mode_two_rate():
    params = FlowParams(p=1, N=8)
    eps = 1e-6
    start = NormalizedState(cosine_state(8, 1.0, {2: eps}), 0.0)
    traj = integrate_normalized(start, params, IntegratorOptions(), 1.0, sample_at=[0.0, 1.0])
    # linear regime: k̂(2) decays like e^{-(3p-1)τ}
    assert abs(traj.samples[-1].coeff(2)) == pytest.approx(eps * np.exp(-2.0), rel=1e-4)


def test_normalize_trajectory_drops_samples_past_T(round_trajectory):
    normalized = normalize_trajectory(round_trajectory, 0.5, FlowParams(p=1, N=4))
    assert normalized.domain_tag == "normalized_tau"
    assert len(normalized) == len(round_trajectory)
    np.testing.assert_allclose(normalized.means(), 1.0, rtol=1e-12)
    shorter = normalize_trajectory(round_trajectory, round_trajectory.times()[100], FlowParams(p=1, N=4))
    assert len(shorter) == 100


@pytest.mark.parametrize("p", [1, 2, 3])
def test_normalize_scales_Q_by_a_positive_factor(rng, p):
    params = FlowParams(p=p, N=6)
    T, t = 0.4, 0.25
    state = random_symmetric_state(rng, make_mode_set(6), amplitude=0.05).replace(time_stamp=t)
    before = convexity_functional_Q(state, 1024)
    after = convexity_functional_Q(normalize(state, T, params).state, 1024)
    assert abs(before) > 1e-6
    assert after == pytest.approx(before / scale_factor(t, T, p), rel=1e-12)


def test_normalize_keeps_Q_zero():
    params = FlowParams(p=2, N=16)
    state = curvature_from_support(SupportSpec(harmonics={2: (0.03, 0.01)}), make_mode_set(16))
    normalized = normalize(state.replace(time_stamp=0.1), 2 / 3, params).state
    assert abs(convexity_functional_Q(normalized, 4096)) <= 1e-10
