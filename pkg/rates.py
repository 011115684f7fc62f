"""
Rate extraction and comparison with the predicted exponents, plus the
admissibility checks on initial data.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Literal, NamedTuple, Sequence

import numpy as np

from config import AMPLITUDE_FLOOR, DEFAULT_TOLERANCES, Q_GRID_SIZE
from errors import DomainError, FitError
from params import FlowParams
from spectral_core import FourierState, check_grid_size, cl_distance, convexity_functional_Q, oscillation, seminorm

if TYPE_CHECKING:
    from integrator import Trajectory

logger = logging.getLogger(__name__)

Comparison = Literal["two_sided", "at_least", "report_only"]


@dataclass(frozen=True)
class PredictedRates:
    p: int
    mode_decay: Fraction
    convergence_rate: Fraction
    blowup_exponent: Fraction
    mean_offset_rate: Fraction
    alpha_n: dict[int, Fraction] = field(default_factory=dict)

    def alpha(self, n: int) -> Fraction:
        return alpha(n, self.p)


def alpha(n: int, p: int) -> Fraction:
    """α(n, p) = (n² - (p+2)/p) p/(p+1)."""
    return Fraction(n * n * p - (p + 2), p + 1)


def predicted_rates(p: int) -> PredictedRates:
    if p < 1:
        raise DomainError("p must be ≥ 1")
    return PredictedRates(
        p=p,
        mode_decay=Fraction(3 * p - 2, p + 1),
        convergence_rate=Fraction(3 * p - 1),
        blowup_exponent=Fraction(1, p + 1),
        mean_offset_rate=Fraction(6 * p - 2),
        alpha_n={n: alpha(n, p) for n in range(11)},
    )


class PowerLawFit(NamedTuple):
    exponent: float
    amplitude: float
    rms_residual: float


class ExponentialFit(NamedTuple):
    rate: float
    amplitude: float
    rms_residual: float


class TrappingCheck(NamedTuple):
    passed: bool
    margin: float


class SmallnessCheck(NamedTuple):
    passed: bool
    worst_mode: int | None


class TrappingAlong(NamedTuple):
    passed: bool
    max_ratio: float
    worst_mode: int | None
    worst_time: float


@dataclass(frozen=True)
class RateReport:
    quantity: str
    fitted_exponent: float
    predicted_exponent: float
    fit_window: tuple[float, float]
    rms_residual: float
    tolerance: float
    comparison: Comparison = "two_sided"

    @property
    def passed(self) -> bool:
        if self.comparison == "report_only":
            return True
        if self.comparison == "at_least":
            return self.fitted_exponent >= self.predicted_exponent - self.tolerance
        return abs(self.fitted_exponent - self.predicted_exponent) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "fitted": self.fitted_exponent,
            "predicted": self.predicted_exponent,
            "window": list(self.fit_window),
            "rms": self.rms_residual,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "comparison": self.comparison,
        }


def _split_points(points: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(data) < 8:
        raise FitError(f"need at least 8 points to fit, got {len(data)}")
    x, y = data[:, 0], data[:, 1]
    if np.any(y <= 0):
        raise FitError("fit values must be positive")
    return x, y


def fit_power_law(points: Sequence[tuple[float, float]], T: float) -> PowerLawFit:
    """Least squares of log y against log(T - t); the exponent is the slope."""
    t, y = _split_points(points)
    if np.any(t >= T):
        raise FitError("all fit times must precede T")
    log_gap = np.log(T - t)
    if np.ptp(log_gap) < np.log(10.0):
        raise FitError("T - t spans less than one decade")
    slope, intercept = np.polyfit(log_gap, np.log(y), 1)
    residual = np.log(y) - (slope * log_gap + intercept)
    return PowerLawFit(float(slope), float(np.exp(intercept)), float(np.sqrt(np.mean(residual**2))))


def fit_exponential(points: Sequence[tuple[float, float]]) -> ExponentialFit:
    """Least squares of log y against tau; the rate is minus the slope."""
    tau, y = _split_points(points)
    if np.ptp(tau) <= 0:
        raise FitError("fit times do not spread")
    slope, intercept = np.polyfit(tau, np.log(y), 1)
    residual = np.log(y) - (slope * tau + intercept)
    return ExponentialFit(float(-slope), float(np.exp(intercept)), float(np.sqrt(np.mean(residual**2))))


def check_trapping(psi: FourierState, c_p: float) -> TrappingCheck:
    """ψ̂(0) ≥ c_p ‖ψ‖₂."""
    margin = psi.mean - c_p * seminorm(psi, 2)
    return TrappingCheck(bool(margin >= 0), float(margin))


def _smallness_ratios(psi: FourierState) -> np.ndarray:
    n = np.arange(1, psi.N + 1)
    return n**2 * np.abs(psi.coeffs[psi.N + 1 :]) / psi.mean


def check_delta_smallness(psi: FourierState, delta: float) -> SmallnessCheck:
    """q²|ψ̂(q)| ≤ δ ψ̂(0) for every q ≠ 0, with the coefficient modulus."""
    ratios = _smallness_ratios(psi)
    if ratios.size == 0 or np.max(ratios) == 0:
        return SmallnessCheck(True, None)
    n = np.arange(1, psi.N + 1)
    parts = np.maximum(np.abs(psi.coeffs[psi.N + 1 :].real), np.abs(psi.coeffs[psi.N + 1 :].imag))
    logger.debug(
        "smallness: modulus ratio %.4g, real/imaginary ratio %.4g",
        np.max(ratios),
        np.max(n**2 * parts / psi.mean),
    )
    worst = int(np.argmax(ratios)) + 1
    return SmallnessCheck(bool(np.max(ratios) <= delta), worst)


def _report(quantity, fit, predicted, window, tolerance, comparison) -> RateReport:
    return RateReport(
        quantity=quantity,
        fitted_exponent=fit[0],
        predicted_exponent=float(predicted),
        fit_window=(float(window[0]), float(window[-1])),
        rms_residual=fit[2],
        tolerance=float(tolerance),
        comparison=comparison,
    )


def _usable(x: np.ndarray, y: np.ndarray, scale=1.0) -> tuple[np.ndarray, np.ndarray]:
    """Drops values at or below the amplitude floor, relative to scale."""
    keep = y > AMPLITUDE_FLOOR * scale
    return x[keep], y[keep]


def mode_decay_report(
    traj: "Trajectory",
    T: float,
    params: FlowParams,
    tolerances: dict[str, float] | None = None,
) -> list[RateReport]:
    """
    Power-law fits in T - t: the mean against -1/(p+1), modes 1..min(N,4)
    against (3p-2)/(p+1), the oscillation about the mean against the same
    exponent, and the normalized mean offset against (6p-2)/(p+1).
    """
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    p = params.p
    rates = predicted_rates(p)
    t = traj.times()
    # drop the transient and the last sample next to the cap
    window = slice(int(0.2 * len(t)), len(t) - 1)
    t = t[window]
    samples = traj.samples[window]
    keep = t < T
    t, samples = t[keep], [s for s, k in zip(samples, keep) if k]
    if len(t) < 8 or np.log10((T - t[0]) / (T - t[-1])) < 2:
        raise FitError("trajectory tail must span at least two decades of T - t")
    coeffs = np.array([s.coeffs for s in samples])
    N = traj.N
    reports = []

    means = coeffs[:, N].real
    fit = fit_power_law(list(zip(t, means)), T)
    reports.append(_report("blowup", fit, -rates.blowup_exponent, t, tol["blowup"], "two_sided"))

    decay = rates.mode_decay
    for n in range(1, min(N, 4) + 1):
        tn, amp = _usable(t, np.abs(coeffs[:, N + n]), means)
        comparison = "two_sided" if n == 2 else "at_least"
        _append_power_fit(reports, f"mode{n}", tn, amp, T, decay, decay * tol["mode_decay"], comparison)

    M = check_grid_size(N)
    osc = np.array([oscillation(s, 0, M) for s in samples])
    to, osc = _usable(t, osc, means)
    _append_power_fit(reports, "oscillation_physical", to, osc, T, decay, decay * tol["mode_decay"], "at_least")

    scale = ((p + 1) / p) ** (1 / (p + 1)) * (T - t) ** (1 / (p + 1))
    tm, offset = _usable(t, np.abs(scale * means - 1))
    offset_rate = Fraction(6 * p - 2, p + 1)
    _append_power_fit(reports, "mean_offset_physical", tm, offset, T, offset_rate, 0.0, "report_only")
    return reports


def _append_power_fit(reports, quantity, t, y, T, predicted, tolerance, comparison) -> None:
    try:
        fit = fit_power_law(list(zip(t, y)), T)
    except FitError as exc:
        logger.info("Skipping %s: %s", quantity, exc)
        return
    reports.append(_report(quantity, fit, predicted, t, tolerance, comparison))


def _append_exponential_fit(reports, quantity, tau, y, predicted, tolerance, comparison) -> None:
    try:
        fit = fit_exponential(list(zip(tau, y)))
    except FitError as exc:
        logger.info("Skipping %s: %s", quantity, exc)
        return
    reports.append(_report(quantity, fit, predicted, tau, tolerance, comparison))


def convergence_report(
    norm_traj: "Trajectory",
    params: FlowParams,
    tau_window: tuple[float, float],
    tolerances: dict[str, float] | None = None,
) -> list[RateReport]:
    """
    Exponential fits in τ of ‖k̃ - 1‖_{C^l} for l = 0, 1, 2 and of the
    oscillation about the mean (all against 3p-1), and of |mean(k̃) - 1|
    gated at (1 + tolerance)·(3p-1) and compared with 6p-2.
    """
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    rates = predicted_rates(params.p)
    tau = norm_traj.times()
    inside = (tau >= tau_window[0]) & (tau <= tau_window[1])
    tau = tau[inside]
    samples = [s for s, k in zip(norm_traj.samples, inside) if k]
    M = check_grid_size(norm_traj.N)
    headline = rates.convergence_rate
    reports = []
    for l in (0, 1, 2):
        dist = np.array([cl_distance(s, 1.0, l, M) for s in samples])
        tl, dist = _usable(tau, dist)
        _append_exponential_fit(reports, f"convergence_C{l}", tl, dist, headline, headline * tol["convergence"], "two_sided")

    osc = np.array([oscillation(s, 0, M) for s in samples])
    to, osc = _usable(tau, osc)
    _append_exponential_fit(reports, "oscillation", to, osc, headline, headline * tol["oscillation"], "two_sided")

    # second-order in the amplitude, so it meets the T-error growth sooner
    early = tau <= 0.5 * (tau_window[0] + tau_window[1])
    offset = np.array([abs(s.mean - 1.0) for s in samples])
    tm, offset = _usable(tau[early], offset[early])
    gate = rates.mean_offset_rate - (1 + tol["mean_offset"]) * headline
    _append_exponential_fit(reports, "mean_offset", tm, offset, rates.mean_offset_rate, gate, "at_least")
    return reports


def blowup_constants(traj: "Trajectory", T: float, params: FlowParams) -> tuple[float, float]:
    """Empirical c, c' with c/(T-t) ≤ k̂(0,t)^{p+1} ≤ c'/(T-t) on the sampled times."""
    t = traj.times()
    keep = t < T
    values = (T - t[keep]) * traj.means()[keep] ** (params.p + 1)
    return float(np.min(values)), float(np.max(values))


def trapping_along(traj: "Trajectory", delta: float) -> TrappingAlong:
    """Worst n²|k̂(n,t)|/k̂(0,t) over all samples and modes n ≠ 0."""
    worst_ratio, worst_mode, worst_time = 0.0, None, float(traj.times()[0])
    for state in traj.samples:
        ratios = _smallness_ratios(state)
        if ratios.size and np.max(ratios) > worst_ratio:
            worst_ratio = float(np.max(ratios))
            worst_mode = int(np.argmax(ratios)) + 1
            worst_time = state.time_stamp
    return TrappingAlong(worst_ratio <= delta, worst_ratio, worst_mode, worst_time)


def q_drift(traj: "Trajectory", grid_size: int = Q_GRID_SIZE) -> float:
    """Largest |Q(k)| along a trajectory."""
    return max(abs(convexity_functional_Q(s, grid_size)) for s in traj.samples)
