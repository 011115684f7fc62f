"""
Right-hand side of the Galerkin-truncated curvature flow

    dk̂(n)/dt = Σ_{q ∈ B_n ∩ Z^{p+2}} H(p, q1, q2) k̂(q1) ⋯ k̂(q_{p+2}),   n ∈ Z,

evaluated either by direct summation over index tuples (the oracle) or as
a pseudo-spectral product on an alias-free grid.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import fft as sp_fft

from errors import DomainError, NumericalError
from params import FlowParams
from spectral_core import FourierState, ModeSet, dealiased_grid_size

logger = logging.getLogger(__name__)

Weight = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RhsSplit:
    linear: FourierState
    nonlinear: FourierState


def coefficient_H(p: int, q1, q2):
    """H(p, q1, q2) = 1/p - (p-1) q1 q2 - q1²."""
    return 1.0 / p - (p - 1) * q1 * q2 - q1 * q1


def enumerate_Bn(n: int, Z: ModeSet, p: int) -> Iterator[tuple[int, ...]]:
    """Tuples (q1, ..., q_{p+2}) in Z^{p+2} with q1 + ... + q_{p+2} = n."""
    N = Z.radius
    for head in itertools.product(range(-N, N + 1), repeat=p + 1):
        last = n - sum(head)
        if -N <= last <= N:
            yield (*head, last)


def enumerate_An(n: int, Z: ModeSet, p: int) -> Iterator[tuple[int, ...]]:
    return (q for q in enumerate_Bn(n, Z, p) if sum(1 for x in q if x != 0) >= 2)


def enumerate_Cn(n: int, Z: ModeSet, p: int) -> Iterator[tuple[int, ...]]:
    return (q for q in enumerate_An(n, Z, p) if all(abs(x) > 1 for x in q))


def _check_radius(state: FourierState, params: FlowParams) -> None:
    if state.N != params.N:
        raise DomainError(f"state radius {state.N} does not match N = {params.N}")


def rhs_oracle(state: FourierState, params: FlowParams, weight: Weight = coefficient_H) -> FourierState:
    """
    Direct summation over B_n for every n. Cost grows like N^{p+1} per mode;
    meant for N ≤ 6.
    """
    _check_radius(state, params)
    p, N = params.p, state.N
    out = np.zeros(len(state.modes), dtype=complex)
    for i, n in enumerate(state.modes.members):
        tuples = np.array(list(enumerate_Bn(int(n), state.modes, p)), dtype=int)
        if tuples.size == 0:
            continue
        products = np.prod(state.coeffs[tuples + N], axis=1)
        out[i] = np.sum(weight(p, tuples[:, 0], tuples[:, 1]) * products)
    return state.replace(coeffs=out)


def _to_physical(coeffs: np.ndarray, N: int, M: int) -> np.ndarray:
    half = np.zeros(M // 2 + 1, dtype=complex)
    half[: N + 1] = coeffs[N:]
    return sp_fft.irfft(half, n=M) * M


def _to_modes(samples: np.ndarray, N: int) -> np.ndarray:
    positive = sp_fft.rfft(samples)[: N + 1] / len(samples)
    return np.concatenate([np.conj(positive[:0:-1]), positive])


def flow_operator(coeffs: np.ndarray, N: int, p: int) -> tuple[np.ndarray, float]:
    """
    Coefficients on -N..N of F(k) = k^{p+1}k'' + (p-1)k^p k'² + k^{p+2}/p, and
    the smallest curvature sample on the product grid. Each factor is
    supported on Z; only the final index is restricted.
    """
    M = dealiased_grid_size(N, p)
    n = np.arange(-N, N + 1)
    k = _to_physical(coeffs, N, M)
    k_theta = _to_physical(1j * n * coeffs, N, M)
    k_theta2 = _to_physical(-(n**2) * coeffs, N, M)
    kp = k**p
    product = kp * k * k_theta2 + (p - 1) * kp * k_theta**2 + kp * k * k / p
    return _to_modes(product, N), float(np.min(k))


def rhs_convolution(state: FourierState, params: FlowParams) -> FourierState:
    _check_radius(state, params)
    out, _ = flow_operator(state.coeffs, state.N, params.p)
    return state.replace(coeffs=out)


def rhs(state: FourierState, params: FlowParams) -> FourierState:
    if params.rhs_method == "oracle":
        return rhs_oracle(state, params)
    return rhs_convolution(state, params)


def linear_part(state: FourierState, p: int) -> np.ndarray:
    """((p+2)/p - n²) k̂(0)^{p+1} k̂(n) for n ≠ 0 and k̂(0)^{p+2}/p at n = 0."""
    n = state.modes.members
    k0 = state.coeffs[state.N]
    out = ((p + 2) / p - n**2) * k0 ** (p + 1) * state.coeffs
    out[state.N] = k0 ** (p + 2) / p
    return out


def rhs_split(state: FourierState, params: FlowParams) -> RhsSplit:
    total = rhs(state, params)
    linear = linear_part(state, params.p)
    return RhsSplit(
        linear=state.replace(coeffs=linear),
        nonlinear=state.replace(coeffs=total.coeffs - linear),
    )


def assert_exhaustive_split(Z: ModeSet, p: int) -> None:
    """
    Checks that B_n is the disjoint union of A_n and the tuples with at most
    one nonzero entry, and that the latter carry total weight (p+2)/p - n²
    (1/p at n = 0), i.e. exactly the linear term.
    """
    for n in Z.members:
        n = int(n)
        b_set = set(enumerate_Bn(n, Z, p))
        a_set = set(enumerate_An(n, Z, p))
        single = {q for q in b_set if sum(1 for x in q if x != 0) <= 1}
        if a_set & single or (a_set | single) != b_set:
            raise NumericalError(f"B_{n} is not A_{n} plus single-entry tuples for p = {p}")
        expected_count = p + 2 if n != 0 else 1
        if len(single) != expected_count:
            raise NumericalError(f"B_{n} has {len(single)} single-entry tuples, expected {expected_count}")
        weight = sum(coefficient_H(p, q[0], q[1]) for q in single)
        target = (p + 2) / p - n * n if n != 0 else 1.0 / p
        if abs(weight - target) > 1e-12:
            raise NumericalError(f"linear weight {weight} at n = {n} differs from {target}")
    logger.debug("B_n = A_n ⊎ single-entry tuples verified for N = %d, p = %d", Z.radius, p)
