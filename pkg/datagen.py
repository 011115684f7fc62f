"""
Initial curvature data from support functions of convex curves.

For a support function h the radius of curvature is h + h'', so
k = 1/(h + h''). A harmonic n contributes (1 - n²)(a_n cos nθ + b_n sin nθ)
to h + h''; that has no ±1 modes, which makes Q(k) = ∫e^{iθ}/k dθ vanish
up to quadrature error.
"""
import logging

import numpy as np

from config import DEFAULT_C_P, Q_GRID_SIZE
from errors import ConfigError, ConvexityViolationError, ResolutionError
from params import SupportSpec
from rates import check_delta_smallness, check_trapping
from spectral_core import FourierState, GridFunction, ModeSet, forward_transform, grid_angles, seminorm

logger = logging.getLogger(__name__)


def radius_of_curvature(spec: SupportSpec, theta: np.ndarray) -> np.ndarray:
    """h + h'' on the given angles."""
    rho = np.full_like(theta, spec.base, dtype=float)
    for n, (a, b) in spec.harmonics.items():
        rho += (1 - n * n) * (a * np.cos(n * theta) + b * np.sin(n * theta))
    return rho


def curvature_from_support(spec: SupportSpec, Z: ModeSet, grid_size: int = Q_GRID_SIZE) -> FourierState:
    top = max(spec.harmonics, default=0)
    if grid_size < max(2 * Z.radius + 2, 8 * top):
        raise ResolutionError(f"grid of {grid_size} points too coarse for harmonic {top} and radius {Z.radius}")
    fine = grid_angles(max(grid_size, 64 * top))
    if np.min(radius_of_curvature(spec, fine)) <= 0:
        raise ConvexityViolationError("h + h'' is not positive everywhere, the support function is not strictly convex")
    rho = radius_of_curvature(spec, grid_angles(grid_size))
    return forward_transform(GridFunction(1.0 / rho), Z)


def random_admissible(
    seed: int,
    Z: ModeSet,
    delta_target: float,
    c_p: float = DEFAULT_C_P,
) -> tuple[FourierState, SupportSpec]:
    """
    Draws harmonics 2..min(N,6) and halves their amplitude until the data pass
    the delta-smallness and trapping checks with 10% to spare.
    """
    if not 0 < delta_target < 0.25:
        raise ConfigError(f"delta_target must lie in (0, 1/4), got {delta_target}")
    rng = np.random.default_rng(seed)
    shape = {n: (rng.uniform(-1, 1) / n**2, rng.uniform(-1, 1) / n**2) for n in range(2, min(Z.radius, 6) + 1)}
    amplitude = 0.05
    while True:
        spec = SupportSpec(
            base=1.0,
            harmonics={n: (amplitude * a, amplitude * b) for n, (a, b) in shape.items()},
            seed=seed,
        )
        try:
            state = curvature_from_support(spec, Z)
        except ConvexityViolationError:
            amplitude *= 0.5
            continue
        small, _ = check_delta_smallness(state, 0.9 * delta_target)
        _, margin = check_trapping(state, c_p)
        if small and margin >= 0.1 * c_p * seminorm(state, 2):
            logger.debug("seed %d admissible at amplitude %.3e", seed, amplitude)
            return state, spec
        amplitude *= 0.5
