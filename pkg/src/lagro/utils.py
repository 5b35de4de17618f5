import functools
import json
import logging
import os
from fractions import Fraction
from typing import Any, Dict, Optional, TextIO

import yaml

logger = logging.getLogger(__name__)

BASE_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
CONFIG_PATH = os.path.join(BASE_DIR, "config", "solver.yaml")

METHOD_CCG = "ccg"
METHOD_BENDERS = "benders"
METHODS = (METHOD_CCG, METHOD_BENDERS)

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "engine": {
        "eps": "0",
        "lambda0": None,
        "max_inner_iterations": 10_000,
        "max_outer_iterations": 1_000,
        "max_restarts": 10,
    },
    "oracle": {
        "max_combinations": 2**16,
        "bisection_steps": 20,
        "infeasible_target": "1000000",
        "max_doublings": 64,
    },
    "uncertainty": {"max_points": 2**16},
    "bench": {"workers": 1},
    "figure1": {"grid": 18, "upper": "9/2"},
    "logging": {"level": "INFO"},
}


def config_path() -> str:
    return os.getenv("LAGRO_CONFIG") or CONFIG_PATH


@functools.lru_cache(maxsize=None)
def _read_config(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found at: {path}")

    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_config() -> Dict[str, Any]:
    """Return the solver configuration merged over the built-in defaults."""
    loaded = _read_config(config_path())
    merged: Dict[str, Dict[str, Any]] = {}
    for section, values in DEFAULTS.items():
        merged[section] = {**values, **(loaded.get(section) or {})}
    return merged


def setting(section: str, key: str) -> Any:
    return load_config()[section][key]


def setting_scalar(section: str, key: str) -> Optional[Fraction]:
    """Read a rational setting stored as ``"p/q"`` or an integer; ``None`` stays ``None``."""
    value = setting(section, key)
    if value is None:
        return None
    if isinstance(value, float):
        raise ValueError(f"Setting {section}.{key} must be an integer or a 'p/q' string, got {value!r}")
    return Fraction(value)


def log_level() -> str:
    return (os.getenv("LAGRO_LOG") or setting("logging", "level") or "INFO").upper()


def format_scalar(value: Any) -> str:
    """Render an exact value: ``Fraction(3, 2)`` -> ``"3/2"``, infinities -> ``"inf"`` / ``"-inf"``."""
    if isinstance(value, float):
        if value == float("inf"):
            return "inf"
        if value == float("-inf"):
            return "-inf"
        raise ValueError(f"Unexpected float {value!r}")
    return str(Fraction(value))


def format_vector(values) -> str:
    return "(" + ", ".join(format_scalar(v) for v in values) + ")"


def _jsonable(value: Any) -> Any:
    if isinstance(value, (Fraction, float)):
        return format_scalar(value)
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


class TraceWriter:
    """Engine trace sink writing one JSON object per line."""

    def __init__(self, stream: Optional[TextIO] = None):
        self.stream = stream
        self.records = 0

    def __call__(self, record: Dict[str, Any]) -> None:
        payload = json.dumps(_jsonable(record), ensure_ascii=False, sort_keys=True)
        logger.debug("trace %s", payload)
        if self.stream is not None:
            self.stream.write(payload + "\n")
        self.records += 1
