import numpy as np
import pytest

from conftest import cosine_state
from errors import DomainError
from galerkin import (
    assert_exhaustive_split,
    coefficient_H,
    enumerate_An,
    enumerate_Bn,
    enumerate_Cn,
    linear_part,
    rhs,
    rhs_convolution,
    rhs_oracle,
    rhs_split,
)
from params import FlowParams
from spectral_core import ModeSet, constant_state, make_mode_set, random_symmetric_state


def test_coefficient_H():
    assert coefficient_H(1, 0, 0) == 1.0
    assert coefficient_H(2, 1, -1) == pytest.approx(0.5)
    assert coefficient_H(3, 2, 1) == pytest.approx(1 / 3 - 4 - 4)


@pytest.mark.parametrize("p, expected_b, expected_a", [(1, 7, 6), (2, 19, 18)])
def test_enumerate_counts(p, expected_b, expected_a):
    Z = ModeSet(1)
    assert len(list(enumerate_Bn(0, Z, p))) == expected_b
    assert len(list(enumerate_An(0, Z, p))) == expected_a


def test_enumerate_Bn_sums():
    Z = ModeSet(2)
    tuples = list(enumerate_Bn(3, Z, 2))
    assert tuples
    assert all(sum(q) == 3 and all(abs(x) <= 2 for x in q) for q in tuples)
    assert len(set(tuples)) == len(tuples)


def test_enumerate_Cn():
    # only permutations of (2, 2, -2)
    assert sorted(enumerate_Cn(2, ModeSet(2), 1)) == [(-2, 2, 2), (2, -2, 2), (2, 2, -2)]
    assert list(enumerate_Cn(1, ModeSet(1), 1)) == []


@pytest.mark.parametrize("p", [1, 2, 3])
def test_exhaustive_split(p):
    assert_exhaustive_split(make_mode_set(2), p)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_constant_state_rhs(p):
    state = constant_state(make_mode_set(3), 1.5)
    for method in ("oracle", "convolution"):
        out = rhs(state, FlowParams(p=p, N=3, rhs_method=method))
        assert out.coeff(0).real == pytest.approx(1.5 ** (p + 2) / p, rel=1e-14)
        assert np.max(np.abs(np.delete(out.coeffs, 3))) < 1e-13


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_convolution_matches_oracle(rng, p, N):
    params = FlowParams(p=p, N=N)
    for _ in range(5):
        state = random_symmetric_state(rng, make_mode_set(N))
        direct = rhs_oracle(state, params).coeffs
        fast = rhs_convolution(state, params).coeffs
        assert np.max(np.abs(fast - direct)) <= 1e-12 * np.max(np.abs(direct))


def test_even_data_keeps_odd_modes_zero():
    state = cosine_state(4, 1.0, {2: 0.03, 4: 0.01})
    out = rhs_oracle(state, FlowParams(p=2, N=4))
    odd = [4 + n for n in (-3, -1, 1, 3)]
    assert np.all(out.coeffs[odd] == 0)


def test_linear_part_near_circle():
    eps = 1e-4
    state = cosine_state(4, 1.0, {2: eps / 2})
    split = rhs_split(state, FlowParams(p=1, N=4))
    # single-tuple part on mode 2: ((p+2)/p - 4) k̂(0)^{p+1} k̂(2)
    assert split.linear.coeff(2).real == pytest.approx(-eps / 2, rel=1e-12)
    assert abs(split.nonlinear.coeff(2)) < 1e-9
    np.testing.assert_allclose(split.linear.coeffs + split.nonlinear.coeffs, rhs(state, FlowParams(p=1, N=4)).coeffs)


def test_linear_part_mean():
    state = constant_state(make_mode_set(2), 2.0)
    assert linear_part(state, 2)[2] == pytest.approx(2.0**4 / 2)


def test_rhs_rejects_radius_mismatch():
    with pytest.raises(DomainError):
        rhs(constant_state(make_mode_set(2), 1.0), FlowParams(p=1, N=3))


def test_rhs_method_alias():
    assert FlowParams(rhs_method="conv").rhs_method == "convolution"


@pytest.mark.parametrize("method", ["oracle", "convolution"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_rhs_commutes_with_rotation(rng, p, method):
    params = FlowParams(p=p, N=3, rhs_method=method)
    state = random_symmetric_state(rng, make_mode_set(3), amplitude=0.05)
    phase = np.exp(1j * state.modes.members * 0.7)
    rotated = rhs(state.replace(coeffs=state.coeffs * phase), params)
    expected = rhs(state, params).coeffs * phase
    assert np.max(np.abs(rotated.coeffs - expected)) <= 1e-12 * np.max(np.abs(expected))


@pytest.mark.parametrize("method", ["oracle", "convolution"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_rhs_is_homogeneous_of_degree_p_plus_2(rng, p, method):
    params = FlowParams(p=p, N=3, rhs_method=method)
    state = random_symmetric_state(rng, make_mode_set(3), amplitude=0.05)
    lam = 1.7
    scaled = rhs(state.replace(coeffs=lam * state.coeffs), params)
    expected = lam ** (p + 2) * rhs(state, params).coeffs
    assert np.max(np.abs(scaled.coeffs - expected)) <= 1e-12 * np.max(np.abs(expected))


def test_nonlinear_part_is_quadratic_in_the_perturbation():
    params = FlowParams(p=1, N=4)
    sizes = [np.max(np.abs(rhs_split(cosine_state(4, 1.0, {2: eps}), params).nonlinear.coeffs)) for eps in (1e-3, 1e-4)]
    assert sizes[0] / sizes[1] == pytest.approx(100.0, rel=0.05)
