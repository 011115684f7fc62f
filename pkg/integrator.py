"""
Adaptive explicit integration of the truncated Fourier system toward
curvature blow-up, and least-squares estimation of the blow-up time.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

import galerkin
from errors import ConvexityLostError, DomainError, FitError, MaxStepsExceededError, StepUnderflowError
from params import FlowParams, IntegratorOptions
from rates import check_delta_smallness
from spectral_core import FourierState, check_grid_size, evaluate, symmetrize

logger = logging.getLogger(__name__)

DomainTag = Literal["physical_t", "normalized_tau"]
Derivative = Callable[[FourierState], FourierState]

# Dormand-Prince 5(4), rows of the extended Butcher table
_C = [0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0]
_BT = {
    0: [1 / 5],
    1: [3 / 40, 9 / 40],
    2: [44 / 45, -56 / 15, 32 / 9],
    3: [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    4: [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    5: [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
}
# 5th minus 4th order weights, local error estimate
_TR = [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]

# PI step-size control
_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass
class StepController:
    """Error history for the PI controller and the reusable last stage."""

    err_prev: float = 1e-4
    rejected: bool = False
    fsal_state: FourierState | None = None
    fsal_deriv: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    params: FlowParams
    samples: tuple[FourierState, ...]
    domain_tag: DomainTag = "physical_t"
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if not samples:
            raise DomainError("a trajectory needs at least one sample")
        times = np.array([s.time_stamp for s in samples])
        if np.any(np.diff(times) <= 0):
            raise DomainError("trajectory time stamps must be strictly increasing")
        if any(s.modes != samples[0].modes for s in samples):
            raise DomainError("trajectory samples must share one mode set")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def N(self) -> int:
        return self.samples[0].N

    def times(self) -> np.ndarray:
        return np.array([s.time_stamp for s in self.samples])

    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.samples])

    def coefficients(self) -> np.ndarray:
        """Array of shape (samples, 2N+1), columns n = -N..N."""
        return np.array([s.coeffs for s in self.samples])


@dataclass(frozen=True)
class BlowupEstimate:
    T: float
    uncertainty: float
    fit_window: tuple[float, float]
    fit_residual: float


def _advance(
    deriv: Derivative,
    state: FourierState,
    dt: float,
    opts: IntegratorOptions,
    controller: StepController,
) -> tuple[FourierState, float, float, float]:
    y = state.coeffs
    t = state.time_stamp
    if controller.fsal_state is state and controller.fsal_deriv is not None:
        k1 = controller.fsal_deriv
    else:
        k1 = deriv(state).coeffs
    while True:
        if dt < opts.dt_min:
            raise StepUnderflowError(f"step {dt:.3e} fell below dt_min = {opts.dt_min:.1e} at t = {t:.15g}")
        stages = [k1]
        for i, row in _BT.items():
            increment = sum(a * k for a, k in zip(row, stages) if a != 0.0)
            stage_state = state.replace(coeffs=y + dt * increment, time_stamp=t + _C[i + 1] * dt)
            if i == 5:
                y_new = symmetrize(stage_state.coeffs)
                new_state = state.replace(coeffs=y_new, time_stamp=t + dt)
                stages.append(deriv(new_state).coeffs)
            else:
                stages.append(deriv(stage_state).coeffs)
        error = dt * sum(e * k for e, k in zip(_TR, stages) if e != 0.0)
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(error) / scale))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            err = max(err, 1e-10)
            factor = _SAFETY * err**-_ALPHA * controller.err_prev**_BETA
            factor = min(_FAC_MAX, max(_FAC_MIN, factor))
            if controller.rejected:
                factor = min(factor, 1.0)
            controller.err_prev = max(err, 1e-4)
            controller.rejected = False
            controller.fsal_state = new_state
            controller.fsal_deriv = stages[-1]
            return new_state, err, dt, dt * factor
        shrink = _FAC_MIN if not np.isfinite(err) else max(_FAC_MIN, _SAFETY * err**-0.2)
        dt *= shrink
        controller.rejected = True


def step(
    state: FourierState,
    params: FlowParams,
    dt: float,
    opts: IntegratorOptions,
    deriv: Derivative | None = None,
    controller: StepController | None = None,
) -> tuple[FourierState, float, float]:
    """
    One accepted Dormand-Prince 5(4) step with PI step-size control. Rejected
    attempts are retried with a smaller step; the scaled error estimate of
    the accepted attempt and the proposed next step are returned.
    """
    deriv = deriv or (lambda s: galerkin.rhs(s, params))
    controller = controller or StepController()
    new_state, err, _, dt_next = _advance(deriv, state, dt, opts, controller)
    if dt_next < opts.dt_min:
        raise StepUnderflowError(f"next step {dt_next:.3e} below dt_min = {opts.dt_min:.1e}")
    return new_state, err, dt_next


def march(
    initial: FourierState,
    deriv: Derivative,
    opts: IntegratorOptions,
    *,
    stop_mean: float | None = None,
    t_end: float | None = None,
    sample_at: Sequence[float] | None = None,
    grid_size: int | None = None,
    stride: int | None = None,
) -> tuple[list[FourierState], str]:
    """
    Steps until the mean reaches stop_mean, time reaches t_end, or (with a
    stop_mean) the step size underflows. With sample_at, steps land exactly
    on the requested times and only those are recorded; otherwise every
    stride-th accepted state is kept (opts.sample_stride by default), plus
    the last one.
    """
    stride = stride or opts.sample_stride
    M = grid_size or check_grid_size(initial.N)
    controller = StepController()
    state = initial
    dt = opts.dt_init
    targets = None
    if sample_at is not None:
        upper = np.inf if t_end is None else t_end
        targets = sorted({float(x) for x in sample_at if initial.time_stamp <= x <= upper})
    samples = []
    if targets is None:
        samples.append(initial)
    elif targets and targets[0] == initial.time_stamp:
        samples.append(initial)
        targets.pop(0)

    steps = 0
    reason = "t_end"
    while True:
        if stop_mean is not None and state.mean >= stop_mean:
            reason = "cap"
            break
        if t_end is not None and state.time_stamp >= t_end:
            break
        if targets is not None and not targets and t_end is None:
            break
        if steps >= opts.max_steps:
            raise MaxStepsExceededError(f"{opts.max_steps} steps taken before reaching the stopping condition")

        limit = targets[0] if targets else t_end
        dt_try = dt
        clamped = limit is not None and state.time_stamp + dt >= limit
        if clamped:
            dt_try = limit - state.time_stamp
        try:
            new_state, _, dt_used, dt_next = _advance(deriv, state, dt_try, opts, controller)
        except StepUnderflowError as exc:
            if stop_mean is None:
                raise
            logger.warning("Stopping at t = %.15g: %s", state.time_stamp, exc)
            reason = "underflow"
            break
        steps += 1
        if clamped and dt_used == dt_try:
            new_state = new_state.replace(time_stamp=limit)
            controller.fsal_state = new_state
        else:
            clamped = False

        k = evaluate(new_state, M).samples
        if np.min(k) <= 0:
            raise ConvexityLostError(
                f"curvature sample {np.min(k):.3e} at t = {new_state.time_stamp:.15g}; the flow left the convex regime"
            )

        state = new_state
        dt = max(dt_next, dt) if clamped else dt_next
        if targets is not None:
            if clamped and targets and limit == targets[0]:
                samples.append(state)
                targets.pop(0)
        elif steps % stride == 0:
            samples.append(state)
        if steps % 1000 == 0:
            logger.debug("step %d: t = %.15g, mean = %.6e, dt = %.3e", steps, state.time_stamp, state.mean, dt)

    if targets is None and samples[-1] is not state:
        samples.append(state)
    logger.info("Integration stopped (%s) after %d steps at t = %.15g", reason, steps, state.time_stamp)
    return samples, reason


def integrate_to_blowup(
    initial: FourierState,
    params: FlowParams,
    opts: IntegratorOptions,
    delta: float | None = None,
) -> tuple[Trajectory, BlowupEstimate]:
    """
    Integrates until k̂(0) reaches the blow-up cap (or the step size
    underflows near the singularity), then estimates T from the tail.
    """
    if initial.N != params.N:
        raise DomainError(f"initial state radius {initial.N} does not match N = {params.N}")
    k0 = initial.coeff(0)
    if k0.real <= 0 or abs(k0.imag) > 0:
        raise DomainError(f"initial mode 0 must be real and positive, got {k0}")
    cap = opts.cap_for(params.p)
    if cap <= k0.real:
        raise DomainError(f"blow-up cap {cap} does not exceed initial mean {k0.real}")

    warnings = []
    if delta is not None:
        passed, worst_mode = check_delta_smallness(initial, delta)
        if not passed:
            message = f"initial data fails the delta = {delta} smallness check at mode {worst_mode}"
            logger.warning(message)
            warnings.append(message)

    logger.info("Integrating p = %d, N = %d (%s) to cap %.4g", params.p, params.N, params.rhs_method, cap)
    # T is fitted on every accepted state; sample_stride only thins the output
    samples, reason = march(initial, lambda s: galerkin.rhs(s, params), opts, stop_mean=cap, stride=1)
    if reason == "underflow":
        warnings.append("step size underflow before reaching the blow-up cap")
    estimate = estimate_T(Trajectory(params, samples, "physical_t"), params)
    kept = samples[:: opts.sample_stride]
    if kept[-1] is not samples[-1]:
        kept.append(samples[-1])
    return Trajectory(params, kept, "physical_t", warnings), estimate


def estimate_T(traj: Trajectory, params: FlowParams) -> BlowupEstimate:
    """
    Fits y(t) = ((p+1)/p) k̂(0,t)^{-(p+1)}, affine in t up to higher-order
    corrections, on the last 20% of samples and extrapolates its root.
    """
    p = params.p
    t = traj.times()
    k0 = traj.means()
    start = int(0.8 * len(t))
    tail = k0[start:] >= 10 * k0[0]
    t_tail, k_tail = t[start:][tail], k0[start:][tail]
    if len(t_tail) < 10:
        raise FitError(f"only {len(t_tail)} tail samples with k̂(0) ≥ 10× its initial value, need 10")
    if np.any(np.diff(k_tail) < 0):
        raise FitError("k̂(0) is not monotone on the fit window")

    y = (p + 1) / p * k_tail ** -(p + 1)
    t_last = t_tail[-1]
    (slope, intercept), cov = np.polyfit(t_tail - t_last, y, 1, cov=True)
    if slope >= 0:
        raise FitError("reciprocal-power fit has non-negative slope, no finite blow-up time")
    T = t_last - intercept / slope
    grad = np.array([intercept / slope**2, -1.0 / slope])
    uncertainty = float(np.sqrt(max(grad @ cov @ grad, 0.0)))
    fitted = slope * (t_tail - t_last) + intercept
    residual = float(np.sqrt(np.mean(((y - fitted) / y) ** 2)))
    if T <= t[-1]:
        raise FitError(f"extrapolated T = {T:.15g} does not exceed the last sample time {t[-1]:.15g}")
    logger.info("Estimated T = %.15g ± %.2e (rms relative residual %.2e)", T, uncertainty, residual)
    return BlowupEstimate(float(T), uncertainty, (float(t_tail[0]), float(t_tail[-1])), residual)
