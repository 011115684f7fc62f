"""
Fourier representation of 2π-periodic real functions.

States hold the complex wavenumbers k̂(n) for n = -N..N in one array, index
n + N. Transforms are the uniform trapezoid rule, i.e. a DFT, which is
spectrally accurate for periodic integrands and exact for trigonometric
polynomials that the grid resolves.
"""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import orjson
from scipy import fft as sp_fft

from config import REALITY_TOL
from errors import ConvexityLostError, DomainError, RealityError, ResolutionError


@dataclass(frozen=True)
class ModeSet:
    """The symmetric integer interval {-N, ..., N}."""

    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise DomainError(f"mode radius must be non-negative, got {self.radius}")

    @property
    def members(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def __len__(self) -> int:
        return 2 * self.radius + 1

    def __contains__(self, n) -> bool:
        return abs(int(n)) <= self.radius

    def index(self, n: int) -> int:
        return n + self.radius


@dataclass(frozen=True)
class FourierState:
    modes: ModeSet
    coeffs: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != (len(self.modes),):
            raise DomainError(f"expected {len(self.modes)} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "time_stamp", float(self.time_stamp))

    @property
    def N(self) -> int:
        return self.modes.radius

    @property
    def mean(self) -> float:
        return float(self.coeffs[self.N].real)

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs[self.modes.index(n)]) if n in self.modes else 0j

    def replace(self, coeffs=None, time_stamp=None) -> "FourierState":
        return FourierState(
            self.modes,
            self.coeffs if coeffs is None else coeffs,
            self.time_stamp if time_stamp is None else time_stamp,
        )

    def scaled(self, factor: float) -> "FourierState":
        return self.replace(coeffs=self.coeffs * factor)


@dataclass(frozen=True)
class GridFunction:
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def grid_size(self) -> int:
        return len(self.samples)

    @property
    def theta(self) -> np.ndarray:
        return grid_angles(self.grid_size)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], grid_size: int) -> "GridFunction":
        return cls(f(grid_angles(grid_size)))


def grid_angles(grid_size: int) -> np.ndarray:
    return 2 * np.pi * np.arange(grid_size) / grid_size


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


def check_grid_size(N: int) -> int:
    """Grid for positivity and C^l checks on radius-N states."""
    return max(64, next_pow2(4 * N + 8))


def dealiased_grid_size(N: int, p: int) -> int:
    """Power-of-two grid on which a (p+2)-fold product of radius-N data is alias free."""
    return next_pow2((p + 2) * (2 * N + 1))


def make_mode_set(N: int) -> ModeSet:
    return ModeSet(int(N))


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Projects onto reality-symmetric coefficients: average c(n) with conj(c(-n))."""
    return 0.5 * (coeffs + np.conj(coeffs[::-1]))


def reality_defect(coeffs: np.ndarray) -> float:
    return float(np.max(np.abs(coeffs - np.conj(coeffs[::-1]))))


def forward_transform(g: GridFunction, Z: ModeSet) -> FourierState:
    """
    Trapezoid approximation of f̂(n) = (1/2π)∫ f(θ)e^{-inθ}dθ for n in Z.
    Uses the real transform, so the result is exactly conjugate symmetric.
    """
    M = g.grid_size
    if M < 2 * Z.radius + 2:
        raise ResolutionError(f"grid of {M} points cannot resolve radius {Z.radius}")
    positive = sp_fft.rfft(g.samples)[: Z.radius + 1] / M
    coeffs = np.concatenate([np.conj(positive[:0:-1]), positive])
    return FourierState(Z, coeffs)


def to_grid_array(coeffs: np.ndarray, N: int, M: int) -> np.ndarray:
    """Places coefficients n = -N..N at FFT positions n mod M."""
    full = np.zeros(M, dtype=complex)
    full[np.arange(-N, N + 1) % M] = coeffs
    return full


def evaluate(state: FourierState, grid_size: int) -> GridFunction:
    """Samples Σ k̂(n)e^{inθ_j} on θ_j = 2πj/M, checking the imaginary residue."""
    M = int(grid_size)
    if M < 2 * state.N + 2:
        raise ResolutionError(f"grid of {M} points cannot resolve radius {state.N}")
    values = sp_fft.ifft(to_grid_array(state.coeffs, state.N, M)) * M
    scale = float(np.max(np.abs(state.coeffs))) or 1.0
    residue = float(np.max(np.abs(values.imag)))
    if residue > REALITY_TOL * scale:
        raise RealityError(f"imaginary residue {residue:.3e} exceeds {REALITY_TOL:.0e} relative")
    return GridFunction(values.real)


def seminorm(state: FourierState, beta: float) -> float:
    """
    ‖ψ‖_β = max over ξ of |ξ|^β max(|Re ψ̂(ξ)|, |Im ψ̂(ξ)|), with |0|^β = 0 for
    β > 0 and 1 for β = 0.
    """
    weights = np.abs(state.modes.members).astype(float) ** beta
    parts = np.maximum(np.abs(state.coeffs.real), np.abs(state.coeffs.imag))
    return float(np.max(weights * parts))


def convexity_functional_Q(state: FourierState, grid_size: int) -> complex:
    """Q(k) = ∫ e^{iθ}/k(θ) dθ by the trapezoid rule on M points."""
    g = evaluate(state, grid_size)
    k = g.samples
    if np.min(k) <= 0:
        raise ConvexityLostError(f"curvature sample {np.min(k):.3e} is not positive")
    return complex(2 * np.pi / g.grid_size * np.sum(np.exp(1j * g.theta) / k))


def derivative(state: FourierState, order: int) -> FourierState:
    return state.replace(coeffs=(1j * state.modes.members) ** order * state.coeffs)


def cl_distance(state: FourierState, reference: float, l: int, grid_size: int) -> float:
    """‖state - reference‖_{C^l}: max over j ≤ l of the grid sup of the j-th derivative."""
    if grid_size < max(4 * state.N, 2 * state.N + 2):
        raise ResolutionError(f"C^l distance needs at least {4 * state.N} grid points")
    shifted = state.coeffs.copy()
    shifted[state.N] -= reference
    diff = state.replace(coeffs=shifted)
    return max(float(np.max(np.abs(evaluate(derivative(diff, j), grid_size).samples))) for j in range(l + 1))


def oscillation(state: FourierState, l: int, grid_size: int) -> float:
    """C^l distance of a state from its own mean."""
    return cl_distance(state, state.mean, l, grid_size)


def sup_distance(a: FourierState, b: FourierState, grid_size: int) -> float:
    if a.modes != b.modes:
        raise DomainError("states live on different mode sets")
    return cl_distance(a.replace(coeffs=a.coeffs - b.coeffs), 0.0, 0, grid_size)


def constant_state(Z: ModeSet, value: float, time_stamp: float = 0.0) -> FourierState:
    coeffs = np.zeros(len(Z), dtype=complex)
    coeffs[Z.radius] = value
    return FourierState(Z, coeffs, time_stamp)


def random_symmetric_state(
    rng: np.random.Generator, Z: ModeSet, mean: float = 1.0, amplitude: float = 0.1
) -> FourierState:
    """Random reality-symmetric state with positive mean and |n|^-2 decaying modes."""
    n = np.arange(1, Z.radius + 1)
    positive = amplitude * (rng.standard_normal(Z.radius) + 1j * rng.standard_normal(Z.radius)) / n**2
    coeffs = np.concatenate([np.conj(positive[::-1]), [mean], positive])
    return FourierState(Z, coeffs)


def state_to_dict(state: FourierState) -> dict:
    return {
        "N": state.N,
        "re": state.coeffs.real.tolist(),
        "im": state.coeffs.imag.tolist(),
        "t": state.time_stamp,
    }


def state_from_dict(data: dict) -> FourierState:
    N = int(data["N"])
    re = np.asarray(data["re"], dtype=float)
    im = np.asarray(data["im"], dtype=float)
    if re.shape != (2 * N + 1,) or im.shape != (2 * N + 1,):
        raise DomainError("re and im must hold 2N+1 coefficients")
    return FourierState(make_mode_set(N), re + 1j * im, float(data.get("t", 0.0)))


def state_to_json(state: FourierState) -> bytes:
    return orjson.dumps(state_to_dict(state))


def state_from_json(data: bytes | str) -> FourierState:
    return state_from_dict(orjson.loads(data))
