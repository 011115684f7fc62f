"""
Experiment pipelines behind the command-line subcommands. Each cmd_* takes a
validated RunConfig, writes its files into config.output_dir and returns what
it computed so callers (and tests) can inspect it without reading files back.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import orjson
import pandas as pd
from joblib import Parallel, delayed
from pydantic import ValidationError

from config import Q_GRID_SIZE, apply_overrides
from datagen import curvature_from_support, random_admissible
from errors import ConfigError, PCSFError
from galerkin import Weight, coefficient_H
from integrator import BlowupEstimate, Trajectory, integrate_to_blowup
from normalizer import integrate_normalized, normalize, normalize_trajectory
from params import RunConfig, StateSpec, SupportSpec
from rates import (
    RateReport,
    blowup_constants,
    convergence_report,
    mode_decay_report,
    q_drift,
    trapping_along,
)
from spectral_core import FourierState, make_mode_set, state_from_dict, sup_distance
from utils import (
    atomic_write,
    ensure_output_dir,
    summary_table,
    write_frame,
    write_json,
    write_reports,
    write_sidecar,
    write_trajectory_csv,
)
from verify import SuiteResult, run_all

logger = logging.getLogger(__name__)

TWO_PATH_TAU = 2.0
NORMALIZED_GRID_POINTS = 401


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(x) for x in err["loc"])
        message = err["msg"].removeprefix("Value error, ")
        parts.append(f"{where}: {message}" if where else message)
    return "; ".join(parts)


def _read_json_source(source: str) -> dict:
    """A path to a JSON file, or inline JSON."""
    try:
        is_file = Path(source).is_file()
    except OSError:
        is_file = False
    try:
        text = Path(source).read_bytes() if is_file else source
        return orjson.loads(text)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"Could not parse '{source}' as JSON: {e}") from e


def load_run_config(
    config_path: str | None = None,
    overrides: list[str] | None = None,
    **flags,
) -> RunConfig:
    """
    Builds a RunConfig from an optional JSON file, the named command-line
    flags and --dotted.path=value overrides, in that order of precedence.
    """
    raw = _read_json_source(config_path) if config_path else {}
    if not isinstance(raw, dict):
        raise ConfigError("Config file must hold a JSON object")

    if flags.get("init_spec") is not None:
        raw["init"] = _read_json_source(flags["init_spec"])
    if flags.get("seed") is not None:
        raw.setdefault("init", {})["seed"] = flags["seed"]
    for flag, path in (("p", ("params", "p")), ("n_modes", ("params", "N")), ("rhs", ("params", "rhs_method"))):
        if flags.get(flag) is not None:
            raw.setdefault(path[0], {})[path[1]] = flags[flag]
    if flags.get("p_list") is not None:
        raw.setdefault("sweep", {})["p_list"] = flags["p_list"]
    if flags.get("seeds") is not None:
        raw.setdefault("sweep", {})["seeds"] = flags["seeds"]
    if flags.get("out") is not None:
        raw["output_dir"] = flags["out"]
    if flags.get("jobs") is not None:
        raw["jobs"] = flags["jobs"]

    try:
        apply_overrides(raw, overrides or [])
        return RunConfig.model_validate(raw)
    except ValueError as e:
        # ValidationError subclasses ValueError
        if isinstance(e, ValidationError):
            raise ConfigError(_format_validation_error(e)) from e
        raise ConfigError(str(e)) from e


def initial_state(config: RunConfig) -> FourierState:
    Z = make_mode_set(config.params.N)
    init = config.init
    if isinstance(init, StateSpec):
        if init.N != config.params.N:
            raise ConfigError(f"initial state has N = {init.N}, params ask for N = {config.params.N}")
        return state_from_dict(init.model_dump())
    if init.seed is not None and not init.harmonics:
        state, spec = random_admissible(init.seed, Z, config.delta, config.c_p)
        logger.info("Random admissible data for seed %d: harmonics %s", init.seed, sorted(spec.harmonics))
        return state
    return curvature_from_support(init, Z)


def _estimate_dict(estimate: BlowupEstimate) -> dict:
    return {
        "T": estimate.T,
        "uncertainty": estimate.uncertainty,
        "fit_window": list(estimate.fit_window),
        "fit_residual": estimate.fit_residual,
    }


def _config_dict(config: RunConfig) -> dict:
    return config.model_dump(mode="json", exclude={"output_dir", "jobs"})


def run_physical(config: RunConfig) -> tuple[Trajectory, BlowupEstimate]:
    state = initial_state(config)
    return integrate_to_blowup(state, config.params, config.opts, delta=config.delta)


def physical_diagnostics(traj: Trajectory, estimate: BlowupEstimate, config: RunConfig) -> dict:
    c_low, c_high = blowup_constants(traj, estimate.T, config.params)
    trapping = trapping_along(traj, config.delta)
    return {
        "blowup_constants": [c_low, c_high],
        "q_drift": q_drift(traj, Q_GRID_SIZE),
        "trapping": trapping._asdict(),
    }


def cmd_simulate(config: RunConfig) -> tuple[Trajectory, BlowupEstimate]:
    """
    Integrates to the blow-up cap and writes trajectory.csv plus the
    trajectory.json sidecar with the blow-up estimate.
    """
    out = ensure_output_dir(config.output_dir)
    traj, estimate = run_physical(config)
    write_trajectory_csv(out / "trajectory.csv", traj)
    write_sidecar(
        out / "trajectory.json",
        {
            "config": _config_dict(config),
            "domain_tag": traj.domain_tag,
            "samples": len(traj),
            "warnings": list(traj.warnings),
            "blowup": _estimate_dict(estimate),
            **physical_diagnostics(traj, estimate, config),
        },
    )
    return traj, estimate


@dataclass(frozen=True)
class NormalizedRun:
    trajectory: Trajectory
    T: float
    two_path_sup: float
    matched: int


def _merge_sample_times(required: list[float], extra: np.ndarray, gap: float = 1e-9) -> list[float]:
    """required plus the extra times farther than gap from every required one."""
    if not required:
        return sorted(set(extra.tolist()))
    anchors = np.asarray(required)
    pos = np.searchsorted(anchors, extra)
    left = anchors[np.clip(pos - 1, 0, len(anchors) - 1)]
    right = anchors[np.clip(pos, 0, len(anchors) - 1)]
    nearest = np.minimum(np.abs(extra - left), np.abs(extra - right))
    return sorted(set(required) | set(extra[nearest > gap].tolist()))


def run_normalized(config: RunConfig, physical: Trajectory, estimate: BlowupEstimate) -> NormalizedRun:
    """
    Direct integration of the normalized flow from the normalized initial
    data, sampled on a uniform τ grid and on every physical sample time with
    τ ≤ 2 so both paths can be compared at identical τ.
    """
    params = config.params
    tau_max = config.resolved_tau_max()
    T = estimate.T
    from_physical = normalize_trajectory(physical, T, params)
    matched = {s.time_stamp: s for s in from_physical.samples if s.time_stamp <= min(TWO_PATH_TAU, tau_max)}
    grid = _merge_sample_times(sorted(matched), np.linspace(0.0, tau_max, NORMALIZED_GRID_POINTS))
    start = normalize(physical.samples[0], T, params)
    traj = integrate_normalized(start, params, config.opts, tau_max, sample_at=grid)

    worst = 0.0
    for sample in traj.samples:
        other = matched.get(sample.time_stamp)
        if other is not None:
            worst = max(worst, sup_distance(sample, other, Q_GRID_SIZE))
    logger.info("Two-path sup distance %.3e over %d matched τ", worst, len(matched))
    return NormalizedRun(traj, T, worst, len(matched))


def cmd_normalized(config: RunConfig) -> NormalizedRun:
    """T comes from a physical run first; the normalized flow is then integrated directly."""
    out = ensure_output_dir(config.output_dir)
    physical, estimate = run_physical(config)
    run = run_normalized(config, physical, estimate)
    write_trajectory_csv(out / "normalized.csv", run.trajectory)
    write_sidecar(
        out / "normalized.json",
        {
            "config": _config_dict(config),
            "domain_tag": run.trajectory.domain_tag,
            "samples": len(run.trajectory),
            "tau_max": config.resolved_tau_max(),
            "blowup": _estimate_dict(estimate),
            "two_path": {"max_sup_distance": run.two_path_sup, "matched_samples": run.matched},
        },
    )
    return run


def run_rates(config: RunConfig) -> tuple[list[RateReport], dict]:
    physical, estimate = run_physical(config)
    reports = mode_decay_report(physical, estimate.T, config.params, config.tolerances)
    normalized = run_normalized(config, physical, estimate)
    reports += convergence_report(normalized.trajectory, config.params, config.resolved_tau_window(), config.tolerances)
    diagnostics = {
        "blowup": _estimate_dict(estimate),
        "two_path": {"max_sup_distance": normalized.two_path_sup, "matched_samples": normalized.matched},
        **physical_diagnostics(physical, estimate, config),
    }
    return reports, diagnostics


def cmd_rates(config: RunConfig) -> list[RateReport]:
    """Simulate, normalize, fit. Writes rates.json, diagnostics.json and summary.txt."""
    out = ensure_output_dir(config.output_dir)
    reports, diagnostics = run_rates(config)
    write_reports(out / "rates.json", reports)
    write_sidecar(out / "diagnostics.json", {"config": _config_dict(config), **diagnostics})
    atomic_write(out / "summary.txt", (summary_table(reports) + "\n").encode())
    return reports


def cmd_verify(config: RunConfig, weight: Weight = coefficient_H) -> list[SuiteResult]:
    out = ensure_output_dir(config.output_dir)
    results = run_all(config.params, config.sweep.p_list, seed=getattr(config.init, "seed", None) or 0, weight=weight)
    write_json(out / "verify.json", [r.to_dict() for r in results])
    return results


def _sweep_cell(config: RunConfig, p: int, seed: int) -> dict:
    """One (p, seed) cell; failures come back as rows with an error instead of raising."""
    cell = config.model_copy(
        update={
            "params": config.params.model_copy(update={"p": p}),
            "init": SupportSpec(seed=seed),
            "tau_max": None,
            "tau_start": None,
        }
    )
    row = {"p": p, "seed": seed}
    try:
        reports, diagnostics = run_rates(cell)
    except PCSFError as e:
        logger.warning("Sweep cell p = %d, seed = %d failed: %s", p, seed, e)
        return {**row, "error": f"{type(e).__name__}: {e}"}
    row["T"] = diagnostics["blowup"]["T"]
    for r in reports:
        row[r.quantity] = r.fitted_exponent
    row["pass"] = all(r.passed for r in reports)
    return row


def cmd_sweep(config: RunConfig) -> tuple[pd.DataFrame, list[dict]]:
    """
    Cross product of p_list and seeds, run in a joblib worker pool. Writes the
    aggregate sweep.csv (valid cells, sorted by p then seed) and sweep.json
    listing failed cells. Returns both.
    """
    out = ensure_output_dir(config.output_dir)
    p_list, seeds = config.sweep.p_list, config.sweep.seeds
    if not p_list or not seeds:
        raise ConfigError("sweep needs a non-empty p list and seed list")
    cells = [(p, seed) for p in p_list for seed in seeds]
    logger.info("Sweeping %d cells with %s jobs", len(cells), config.jobs or "all")
    rows = Parallel(n_jobs=config.jobs or -1)(delayed(_sweep_cell)(config, p, seed) for p, seed in cells)

    failures = [r for r in rows if "error" in r]
    frame = pd.DataFrame([r for r in rows if "error" not in r])
    if not frame.empty:
        frame = frame.sort_values(["p", "seed"], kind="stable").reset_index(drop=True)
    write_frame(out / "sweep.csv", frame)
    write_sidecar(out / "sweep.json", {"cells": len(cells), "failures": failures})
    return frame, failures
