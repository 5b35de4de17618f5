# -*- coding: utf-8 -*-
"""Handlers behind the ``app.py`` sub-commands. Each returns a process exit code."""
import logging
from fractions import Fraction
from typing import Optional

import pandas as pd

from bench.bench_runner import run_suite, write_table
from lagro.engine import STATUS_INFEASIBLE, solve_with_restarts
from lagro.errors import (
    EXIT_CONDITION_VIOLATION,
    EXIT_OK,
    EXIT_ROBUST_INFEASIBLE,
    EXIT_UNEXPECTED,
    InputError,
    handle_cli_errors,
)
from lagro.generators import gen_counterexample
from lagro.instances import load_instance
from lagro.kernel import to_scalar
from lagro.model import is_finite
from lagro.multiplier import U_BRUTEFORCE, check_conditions, polynomial_lambda_bound
from lagro.oracle import find_multiplier_upper, min_optimal_multiplier, solve_two_stage_bruteforce, worst_case_L, worst_case_Q
from lagro.utils import METHOD_CCG, TraceWriter, format_scalar, format_vector, setting, setting_scalar

logger = logging.getLogger(__name__)


@handle_cli_errors
def cmd_solve(path: str, method: str = METHOD_CCG, eps=None, lambda0=None, trace_out: Optional[str] = None) -> int:
    inst = load_instance(path)
    if trace_out:
        with open(trace_out, "w", encoding="utf-8") as stream:
            trace = TraceWriter(stream)
            _, _, report = solve_with_restarts(inst, method=method, eps=eps, lambda0=lambda0, trace=trace)
        logger.info("Wrote %d trace records to %s", trace.records, trace_out)
    else:
        _, _, report = solve_with_restarts(inst, method=method, eps=eps, lambda0=lambda0, trace=TraceWriter())
    print(report.render())
    if report.status == STATUS_INFEASIBLE:
        logger.warning("%s is robust infeasible; witness xi=%s", inst.name, format_vector(report.witness))
        return EXIT_ROBUST_INFEASIBLE
    return EXIT_OK


@handle_cli_errors
def cmd_oracle(path: str, x_index: Optional[int] = None) -> int:
    inst = load_instance(path)
    if x_index is None:
        value, x = solve_two_stage_bruteforce(inst)
    else:
        if not 0 <= x_index < len(inst.X):
            raise InputError(f"--x index {x_index} out of range; X has {len(inst.X)} points")
        x = inst.X[x_index]
        value, _ = worst_case_Q(inst, x)

    lines = [f"instance\t{inst.name}", f"value\t{format_scalar(value)}", f"x\t{format_vector(x)}"]
    if not is_finite(value):
        lines.append("worst_case_xi\t-")
        print("\n".join(lines))
        return EXIT_ROBUST_INFEASIBLE if value > 0 else EXIT_OK

    _, xi = worst_case_Q(inst, x)
    lambda_hi = find_multiplier_upper(inst, x)
    lo, hi = min_optimal_multiplier(inst, x, lambda_hi)
    lines += [
        f"worst_case_xi\t{format_vector(xi)}",
        f"multiplier_interval\t[{format_scalar(lo)}, {format_scalar(hi)}]",
    ]
    print("\n".join(lines))
    return EXIT_OK


@handle_cli_errors
def cmd_check(path: str) -> int:
    inst = load_instance(path)
    report = check_conditions(inst)
    print(report.render())
    if not report.overall:
        logger.info("%s fails: %s", inst.name, ", ".join(report.failed))
        return EXIT_CONDITION_VIOLATION
    return EXIT_OK


@handle_cli_errors
def cmd_bound(path: str, u_source: str = U_BRUTEFORCE, lift: bool = False) -> int:
    inst = load_instance(path)
    print(polynomial_lambda_bound(inst, u_source=u_source, lift=lift).render())
    return EXIT_OK


@handle_cli_errors
def cmd_bench(suite_dir: str, method: str = METHOD_CCG, out: Optional[str] = None, workers: Optional[int] = None) -> int:
    frame, summary = run_suite(suite_dir, method=method, workers=workers)
    text = write_table(frame, out)
    if not out:
        print(text, end="")
    logger.info(
        "Solved %d of %d instances (%d skipped, %d errors).",
        len(summary["solved"]),
        len(summary["requested"]),
        len(summary["skipped"]),
        len(summary["errors"]),
    )
    return EXIT_UNEXPECTED if summary["errors"] else EXIT_OK


def figure1_frame(gamma=1, grid: Optional[int] = None, upper=None) -> pd.DataFrame:
    """Worst-case Lagrangian of the counterexample at x = 0 on an even lambda grid."""
    grid = int(grid or setting("figure1", "grid"))
    if grid < 1:
        raise InputError(f"grid must be positive, got {grid}")
    upper = setting_scalar("figure1", "upper") if upper is None else to_scalar(upper)
    inst = gen_counterexample(gamma)
    gamma = to_scalar(gamma)
    x = inst.X[0]

    rows = []
    for i in range(grid + 1):
        lam = upper * Fraction(i, grid)
        value, _ = worst_case_L(inst, x, lam)
        closed_form = max(-gamma, min(Fraction(0), lam / 2 - gamma))
        rows.append(
            {"lambda": format_scalar(lam), "worst_case_L": format_scalar(value), "closed_form": format_scalar(closed_form)}
        )
    return pd.DataFrame(rows, columns=["lambda", "worst_case_L", "closed_form"])


@handle_cli_errors
def cmd_figure1(gamma=1, grid: Optional[int] = None, out: Optional[str] = None) -> int:
    text = write_table(figure1_frame(gamma, grid), out)
    if not out:
        print(text, end="")
    return EXIT_OK
