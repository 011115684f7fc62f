import logging
import os

import orjson
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Load environment variables
load_dotenv()

PCSF_LOG = os.getenv("PCSF_LOG", "info").lower()

# Admissibility defaults
DEFAULT_C_P = 4.0
DEFAULT_DELTA = 0.1

Q_GRID_SIZE = 4096  # quadrature grid for Q checks
AMPLITUDE_FLOOR = 1e-13  # mode amplitudes below this are left out of fits
REALITY_TOL = 1e-12  # relative imaginary residue allowed after an inverse transform
SYMMETRY_DRIFT_TOL = 1e-13

# Per-quantity tolerances for rate reports, relative unless noted
DEFAULT_TOLERANCES = {
    "blowup": 0.01,  # absolute, on the exponent -1/(p+1)
    "mode_decay": 0.10,
    "convergence": 0.05,
    "oscillation": 0.05,
    "mean_offset": 0.50,
}

_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING, "warning": logging.WARNING}


def configure_logging(level: str | None = None) -> None:
    """
    Routes every module logger to stderr through rich. Data never goes to
    stdout, so the console is bound to stderr explicitly.
    """
    name = (level or PCSF_LOG).lower()
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    logging.basicConfig(
        level=_LEVELS.get(name, logging.INFO),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )


def _parse_value(text: str):
    try:
        return orjson.loads(text)
    except orjson.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """
    Applies --dotted.path=value overrides to a raw config dict in place.
    Values are read as JSON when they parse, otherwise kept as strings.
    """
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ValueError(f"Override must look like --dotted.path=value, got '{item}'")
        path, value = item[2:].split("=", 1)
        keys = path.split(".")
        node = raw
        for key in keys[:-1]:
            child = node.get(key)
            if not isinstance(child, dict):
                child = {}
                node[key] = child
            node = child
        node[keys[-1]] = _parse_value(value)
    return raw
