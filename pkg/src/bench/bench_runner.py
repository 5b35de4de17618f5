# -*- coding: utf-8 -*-
"""Benchmark suites: solve every instance file in a directory and tabulate the runs."""
import glob
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from lagro.engine import solve_with_restarts
from lagro.errors import InputError, LagroError
from lagro.instances import YAML_SUFFIXES, load_instance
from lagro.model import GeneralInstance
from lagro.utils import METHOD_BENDERS, METHOD_CCG, METHODS, setting

logger = logging.getLogger(__name__)

INSTANCE_SUFFIXES = (".json",) + YAML_SUFFIXES
TABLE_COLUMNS = ["instance", "method", "status", "value", "Opt", "#It.", "t", "n_restarts"]
ROW_RENAMES = {"opt": "Opt", "iterations": "#It."}

SOLVED = "solved"
SKIPPED = "skipped"
FAILED = "error"


def find_instances(suite_dir: str) -> List[str]:
    if not os.path.isdir(suite_dir):
        raise FileNotFoundError(f"Suite directory not found at: {suite_dir}")
    paths = glob.glob(os.path.join(suite_dir, "**", "*"), recursive=True)
    return sorted(p for p in paths if os.path.isfile(p) and p.lower().endswith(INSTANCE_SUFFIXES))


def _skip_reason(inst, method: str) -> Optional[str]:
    if isinstance(inst, GeneralInstance) and method == METHOD_BENDERS:
        return "Benders runs on indicator instances only"
    if not isinstance(inst, GeneralInstance) and not inst.continuous_second_stage:
        return "indicator instance with discrete recourse"
    return None


def solve_file(path: str, method: str) -> Tuple[str, Any]:
    """Solve one file; returns ``(outcome, row | reason)`` and never raises."""
    try:
        inst = load_instance(path)
        reason = _skip_reason(inst, method)
        if reason:
            return SKIPPED, reason
        _, _, report = solve_with_restarts(inst, method=method)
        row = {ROW_RENAMES.get(key, key): value for key, value in report.as_row().items()}
        return SOLVED, row
    except (LagroError, FileNotFoundError) as exc:
        return FAILED, f"{type(exc).__name__}: {exc}"
    except Exception as exc:
        logger.exception("Unexpected error solving %s", path)
        return FAILED, f"{type(exc).__name__}: {exc}"


def _total_row(frame: pd.DataFrame) -> Dict[str, Any]:
    return {
        "instance": "total",
        "method": "",
        "status": "",
        "value": "",
        "Opt": f"{int(frame['Opt'].sum())}/{len(frame)}",
        "#It.": round(float(frame["#It."].mean()), 3),
        "t": round(float(frame["t"].mean()), 6),
        "n_restarts": int(frame["n_restarts"].sum()),
    }


def run_suite(suite_dir: str, method: str = METHOD_CCG, workers: Optional[int] = None) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Solve a suite and return ``(table, summary)``.

    The summary mirrors a refresh report: ``requested`` lists the files,
    ``solved``/``skipped``/``errors`` map instance files to rows, reasons
    and messages.
    """
    if method not in METHODS:
        raise InputError(f"Unknown method {method!r}; expected one of {', '.join(METHODS)}")
    workers = int(workers or setting("bench", "workers"))
    if workers < 1:
        raise InputError(f"workers must be positive, got {workers}")

    paths = find_instances(suite_dir)
    result: Dict[str, Any] = {"requested": [os.path.basename(p) for p in paths], "solved": {}, "skipped": {}, "errors": {}}
    logger.info("Running %d instances from %s with %s (%d workers)", len(paths), suite_dir, method, workers)

    if workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(solve_file, paths, [method] * len(paths)))
    else:
        outcomes = [solve_file(path, method) for path in paths]

    for path, (outcome, payload) in zip(paths, outcomes):
        key = os.path.basename(path)
        if outcome == SOLVED:
            result["solved"][key] = payload
            logger.info("%s: %s value=%s Opt=%s", key, payload["status"], payload["value"], payload["Opt"])
        elif outcome == SKIPPED:
            result["skipped"][key] = payload
            logger.info("%s: skipped (%s)", key, payload)
        else:
            result["errors"][key] = payload
            logger.error("%s: %s", key, payload)

    rows = sorted(result["solved"].values(), key=lambda row: row["instance"])
    frame = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    if rows:
        frame = pd.concat([frame, pd.DataFrame([_total_row(frame)], columns=TABLE_COLUMNS)], ignore_index=True)
    return frame, result


def write_table(frame: pd.DataFrame, out: Optional[str] = None) -> str:
    """TSV text of ``frame``; also written to ``out`` (``.xlsx`` goes through openpyxl)."""
    text = frame.to_csv(sep="\t", index=False)
    if out:
        directory = os.path.dirname(out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        if out.lower().endswith(".xlsx"):
            frame.to_excel(out, index=False, engine="openpyxl")
        else:
            with open(out, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        logger.info("Wrote %d rows to %s", len(frame), out)
    return text
