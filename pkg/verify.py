"""
Property suites run by the verify subcommand. Each suite returns a
SuiteResult instead of raising, so one failing suite does not hide the rest.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config import Q_GRID_SIZE, SYMMETRY_DRIFT_TOL
from datagen import random_admissible
from errors import PCSFError
from galerkin import Weight, assert_exhaustive_split, coefficient_H, rhs_convolution, rhs_oracle
from integrator import StepController, integrate_to_blowup, step
from normalizer import linear_spectrum
from params import FlowParams, IntegratorOptions
from rates import q_drift
from spectral_core import constant_state, make_mode_set, random_symmetric_state, reality_defect

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"suite": self.name, "pass": self.passed, "detail": self.detail}


def _n_list(N: int) -> list[int]:
    return list(range(1, min(N, 4) + 1))


def oracle_equivalence(
    p_list: Sequence[int],
    N_list: Sequence[int],
    samples: int = 50,
    seed: int = 0,
    weight: Weight = coefficient_H,
    tol: float = 1e-12,
) -> SuiteResult:
    """Convolution against direct summation on random reality-symmetric states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in p_list:
        for N in N_list:
            params = FlowParams(p=p, N=N, rhs_method="oracle")
            Z = make_mode_set(N)
            for _ in range(samples):
                state = random_symmetric_state(rng, Z)
                direct = rhs_oracle(state, params, weight=weight).coeffs
                fast = rhs_convolution(state, params).coeffs
                scale = float(np.max(np.abs(direct))) or 1.0
                worst = max(worst, float(np.max(np.abs(fast - direct))) / scale)
    return SuiteResult("oracle-equivalence", worst <= tol, f"max relative discrepancy {worst:.3e}")


def exhaustive_split(p_list: Sequence[int], N: int = 3) -> SuiteResult:
    try:
        for p in p_list:
            assert_exhaustive_split(make_mode_set(min(N, 3)), p)
    except PCSFError as exc:
        return SuiteResult("exhaustive-split", False, str(exc))
    return SuiteResult("exhaustive-split", True, f"p in {list(p_list)}")


def analytic_round(p_list: Sequence[int], N: int = 2, rel_tol: float = 1e-10) -> SuiteResult:
    """
    Round data against k̂(0,t) = (1 - ((p+1)/p)t)^{-1/(p+1)}. The error is
    measured on y = ((p+1)/p) k̂(0)^{-(p+1)}, which is affine in t and does
    not amplify the integration error near the cap.
    """
    opts = IntegratorOptions(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2)
    worst_y, worst_k, worst_T = 0.0, 0.0, 0.0
    for p in p_list:
        params = FlowParams(p=p, N=N)
        traj, estimate = integrate_to_blowup(constant_state(make_mode_set(N), 1.0), params, opts)
        t = traj.times()
        y = (p + 1) / p * traj.means() ** -(p + 1)
        exact = (p + 1) / p - (p + 1) / p * (p + 1) / p * t
        worst_y = max(worst_y, float(np.max(np.abs(y - exact))))
        k_exact = (exact * p / (p + 1)) ** (-1 / (p + 1))
        worst_k = max(worst_k, float(np.max(np.abs(traj.means() / k_exact - 1))))
        worst_T = max(worst_T, abs(estimate.T - p / (p + 1)))
    passed = worst_y <= 10 * rel_tol and worst_T <= 1e-6
    detail = f"max error in y {worst_y:.3e}, in T {worst_T:.3e} (relative error in k̂(0) {worst_k:.3e})"
    return SuiteResult("analytic-round", passed, detail)


def reality(params: FlowParams, steps: int = 1000, seed: int = 0) -> SuiteResult:
    """Conjugate symmetry is kept to roundoff across many single steps from random states."""
    params = params.model_copy(update={"rhs_method": "convolution"})
    rng = np.random.default_rng(seed)
    Z = make_mode_set(params.N)
    opts = IntegratorOptions(dt_init=1e-4)
    worst = 0.0
    per_start = 100
    for _ in range(max(steps // per_start, 1)):
        state = random_symmetric_state(rng, Z, amplitude=0.05)
        controller = StepController()
        dt = opts.dt_init
        for _ in range(per_start):
            state, _, dt = step(state, params, min(dt, 1e-4), opts, controller=controller)
            worst = max(worst, reality_defect(state.coeffs))
    return SuiteResult("reality", worst <= SYMMETRY_DRIFT_TOL, f"max symmetry defect {worst:.3e}")


def q_conservation(params: FlowParams, seed: int = 0, delta: float = 0.1, tol: float = 1e-8) -> SuiteResult:
    """
    |Q| along a short run from random admissible data. At least 32 modes, so
    the truncated tail of k stays far below the tolerance.
    """
    params = FlowParams(p=params.p, N=max(params.N, 32))
    state, _ = random_admissible(seed, make_mode_set(params.N), delta)
    opts = IntegratorOptions(blowup_cap=100.0 * state.mean)
    traj, _ = integrate_to_blowup(state, params, opts)
    drift = q_drift(traj, Q_GRID_SIZE)
    return SuiteResult("q-drift", drift <= tol, f"max |Q| {drift:.3e} over {len(traj)} samples")


def spectrum(p_list: Sequence[int], N: int, tol: float = 1e-6) -> SuiteResult:
    worst = 0.0
    for p in p_list:
        measured = linear_spectrum(FlowParams(p=p, N=N))
        for n, value in measured.items():
            worst = max(worst, abs(value - (-p * n * n + p + 1)))
    return SuiteResult("linear-spectrum", worst <= tol, f"max eigenvalue error {worst:.3e}")


def run_all(
    params: FlowParams,
    p_list: Sequence[int] = (1, 2, 3),
    seed: int = 0,
    weight: Weight = coefficient_H,
) -> list[SuiteResult]:
    suites = [
        ("oracle-equivalence", lambda: oracle_equivalence(p_list, _n_list(params.N), seed=seed, weight=weight)),
        ("exhaustive-split", lambda: exhaustive_split(p_list)),
        ("analytic-round", lambda: analytic_round(p_list)),
        ("reality", lambda: reality(params, seed=seed)),
        ("q-drift", lambda: q_conservation(params, seed=seed)),
        ("linear-spectrum", lambda: spectrum(p_list, params.N)),
    ]
    results = []
    for name, suite in suites:
        try:
            result = suite()
        except PCSFError as exc:
            result = SuiteResult(name, False, f"{type(exc).__name__}: {exc}")
        logger.info("%s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
        results.append(result)
    return results
