import numpy as np
import pytest

from integrator import Trajectory
from params import FlowParams, IntegratorOptions, RunConfig, SupportSpec
from spectral_core import FourierState, constant_state, make_mode_set


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cosine_state(N: int, mean: float, modes: dict[int, float], t: float = 0.0) -> FourierState:
    """mean + Σ 2 a_n cos nθ, i.e. k̂(±n) = a_n."""
    Z = make_mode_set(N)
    coeffs = np.zeros(len(Z), dtype=complex)
    coeffs[N] = mean
    for n, a in modes.items():
        coeffs[N + n] = coeffs[N - n] = a
    return FourierState(Z, coeffs, t)


def round_times(T: float, decades: float = 6.0, count: int = 200) -> np.ndarray:
    """Times from 0 toward T, evenly spaced in log(T - t)."""
    return T * (1.0 - 10.0 ** -np.linspace(0.0, decades, count))


@pytest.fixture
def round_trajectory():
    """Exact round solution for p = 1 sampled over six decades of T - t."""
    params = FlowParams(p=1, N=4)
    Z = make_mode_set(4)
    t = round_times(0.5)
    states = [constant_state(Z, (1 - 2 * ti) ** -0.5, ti) for ti in t]
    return Trajectory(params, states, "physical_t")


@pytest.fixture
def round_config(tmp_path):
    return RunConfig(
        params=FlowParams(p=1, N=2),
        opts=IntegratorOptions(),
        init=SupportSpec(),
        output_dir=tmp_path,
    )
