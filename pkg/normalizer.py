"""
Self-similar normalization

    k̃ = ((p+1)/p)^{1/(p+1)} (T-t)^{1/(p+1)} k,    τ = -log(1 - t/T)/(p+1),

under which the shrinking circle is the fixed point k̃ ≡ 1, and direct
integration of the normalized flow

    ∂k̃/∂τ = p k̃^{p+1} k̃'' + p(p-1) k̃^p k̃'² + k̃^{p+2} - k̃.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import ConvexityLostError, DomainError
from galerkin import flow_operator
from integrator import Trajectory, march
from params import FlowParams, IntegratorOptions
from spectral_core import FourierState, constant_state, make_mode_set

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizedState:
    state: FourierState
    tau: float

    def __post_init__(self):
        if self.tau < 0:
            raise DomainError(f"normalized time must be non-negative, got {self.tau}")
        if self.state.mean <= 0:
            raise DomainError("normalized mean must be positive")


def tau_of_t(t: float, T: float, p: int) -> float:
    if not 0 <= t < T:
        raise DomainError(f"need 0 ≤ t < T, got t = {t}, T = {T}")
    return float(-np.log1p(-t / T) / (p + 1))


def t_of_tau(tau: float, T: float, p: int) -> float:
    if tau < 0:
        raise DomainError(f"need τ ≥ 0, got {tau}")
    return float(-T * np.expm1(-(p + 1) * tau))


def scale_factor(t: float, T: float, p: int) -> float:
    return ((p + 1) / p) ** (1 / (p + 1)) * (T - t) ** (1 / (p + 1))


def normalize(state: FourierState, T: float, params: FlowParams) -> NormalizedState:
    t = state.time_stamp
    if t >= T:
        raise DomainError(f"cannot normalize at t = {t} ≥ T = {T}")
    tau = tau_of_t(t, T, params.p)
    scaled = state.replace(coeffs=state.coeffs * scale_factor(t, T, params.p), time_stamp=tau)
    return NormalizedState(scaled, tau)


def normalize_trajectory(traj: Trajectory, T: float, params: FlowParams) -> Trajectory:
    """Maps the samples of a physical-time trajectory with t < T to the τ domain."""
    states = [normalize(s, T, params).state for s in traj.samples if s.time_stamp < T]
    return Trajectory(params, states, "normalized_tau", traj.warnings)


def rhs_normalized(state: FourierState, params: FlowParams) -> FourierState:
    if state.N != params.N:
        raise DomainError(f"state radius {state.N} does not match N = {params.N}")
    flow, k_min = flow_operator(state.coeffs, state.N, params.p)
    if k_min <= 0:
        raise ConvexityLostError(f"normalized curvature sample {k_min:.3e} is not positive")
    return state.replace(coeffs=params.p * flow - state.coeffs)


def linear_spectrum(params: FlowParams, modes: Sequence[int] = (0, 1, 2, 3), eps: float = 1e-5) -> dict[int, float]:
    """
    Central-difference Jacobian of rhs_normalized at k̃ ≡ 1, one cosine mode
    at a time. The linearization is diagonal in n with eigenvalue -pn² + p + 1.
    """
    base = constant_state(make_mode_set(params.N), 1.0)
    N = params.N
    spectrum = {}
    for n in modes:
        if n > N:
            continue
        bump = np.zeros(len(base.modes), dtype=complex)
        if n == 0:
            bump[N] = eps
            width = 2 * eps
        else:
            bump[N + n] = bump[N - n] = eps / 2
            width = eps
        plus = rhs_normalized(base.replace(coeffs=base.coeffs + bump), params)
        minus = rhs_normalized(base.replace(coeffs=base.coeffs - bump), params)
        spectrum[n] = float((plus.coeff(n) - minus.coeff(n)).real / width)
    return spectrum


def integrate_normalized(
    initial: NormalizedState,
    params: FlowParams,
    opts: IntegratorOptions,
    tau_max: float,
    sample_at: Sequence[float] | None = None,
) -> Trajectory:
    """
    Adaptive integration in τ up to tau_max. With sample_at the steps land on
    exactly those τ values and only they are recorded.
    """
    state = initial.state.replace(time_stamp=initial.tau)
    logger.info("Integrating normalized flow p = %d, N = %d to τ = %.4g", params.p, params.N, tau_max)
    samples, _ = march(state, lambda s: rhs_normalized(s, params), opts, t_end=tau_max, sample_at=sample_at)
    return Trajectory(params, samples, "normalized_tau")
