import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import orjson
import pandas as pd

from errors import OutputError, PCSFError
from integrator import Trajectory
from rates import RateReport

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
CSV_FLOAT_FORMAT = "%.17g"


def ensure_output_dir(path: Path) -> Path:
    """
    Checks that the output directory exists and is a directory. It is never
    created here; a missing directory is an I/O error.
    """
    path = Path(path)
    if not path.is_dir():
        raise OutputError(f"Output directory '{path}' does not exist")
    return path


def atomic_write(path: Path, data: bytes) -> None:
    """Writes to a temp file in the same directory, then renames over the target."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except OSError as e:
        raise OutputError(f"Failed to write {path}: {e}") from e
    logger.debug("Wrote %s (%d bytes)", path, len(data))


def write_json(path: Path, payload) -> None:
    atomic_write(path, orjson.dumps(payload, option=JSON_OPTIONS) + b"\n")


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    """
    One row per sample: the time column (t or tau), Re k̂(0), then Re and Im
    of k̂(n) for n = 1..N. Negative modes follow by conjugate symmetry.
    """
    coeffs = traj.coefficients()
    N = traj.N
    columns = {"t" if traj.domain_tag == "physical_t" else "tau": traj.times(), "khat0_re": coeffs[:, N].real}
    for n in range(1, N + 1):
        columns[f"khat{n}_re"] = coeffs[:, N + n].real
        columns[f"khat{n}_im"] = coeffs[:, N + n].imag
    return pd.DataFrame(columns)


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    atomic_write(path, frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT).encode())


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    write_frame(path, trajectory_frame(traj))


def write_sidecar(path: Path, payload: dict) -> None:
    """JSON sidecar. The only non-deterministic field lives in the metadata block."""
    body = dict(payload)
    body["metadata"] = {"created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    write_json(path, body)


def write_reports(path: Path, reports: Iterable[RateReport]) -> None:
    write_json(path, [r.to_dict() for r in reports])


def summary_table(reports: Iterable[RateReport]) -> str:
    """Fixed-width table: quantity | fitted | predicted | pass."""
    lines = [f"{'quantity':<22} {'fitted':>12} {'predicted':>12} {'pass':>5}"]
    lines.append("-" * len(lines[0]))
    for r in reports:
        flag = "yes" if r.passed else "no"
        lines.append(f"{r.quantity:<22} {r.fitted_exponent:>12.6f} {r.predicted_exponent:>12.6f} {flag:>5}")
    return "\n".join(lines)


def error_payload(exc: PCSFError) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}


def write_error_json(output_dir: Path, exc: PCSFError) -> None:
    """Best-effort error.json; skipped when the directory itself is the problem."""
    output_dir = Path(output_dir)
    if not output_dir.is_dir():
        return
    try:
        write_json(output_dir / "error.json", error_payload(exc))
    except OutputError as e:
        logger.warning("Could not record error.json: %s", e)
