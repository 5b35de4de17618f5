"""Sufficient conditions for the closed-form multiplier and the factorial multiplier bound."""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from lagro.errors import ConditionViolationError, InfeasibleDecisionError, InputError
from lagro.kernel import (
    ONE,
    ZERO,
    LinearProgram,
    Mat,
    find_non_unimodular_submatrix,
    hstack,
    induced_inf_norm,
    is_integral,
    max_abs,
    max_abs_norm,
    solve_milp,
    to_scalar,
)
from lagro.model import GeneralInstance, Instance, IndicatorInstance, is_finite
from lagro.oracle import solve_two_stage_bruteforce, worst_case_Q
from lagro.utils import format_scalar

logger = logging.getLogger(__name__)

U_BRUTEFORCE = "bruteforce"
U_INTERVAL = "interval"


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    witness: str = ""


@dataclass(frozen=True)
class ConditionReport:
    kind: str
    conditions: Tuple[Condition, ...]

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.conditions if not c.passed]

    def render(self) -> str:
        lines = [f"Sufficient conditions ({self.kind} instance):"]
        for idx, cond in enumerate(self.conditions, start=1):
            status = "pass" if cond.passed else "FAIL"
            suffix = f" ({cond.witness})" if cond.witness else ""
            lines.append(f"  {idx}. {cond.name}: {status}{suffix}")
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _first_fractional_entry(named: Sequence[Tuple[str, object]]) -> Optional[str]:
    for name, data in named:
        rows = data if data and isinstance(data[0], tuple) else (data,)
        is_matrix = rows is data
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                if not is_integral(value):
                    where = f"{name}[{i}][{j}]" if is_matrix else f"{name}[{j}]"
                    return f"{where} = {format_scalar(value)}"
    return None


def _x_integrality(inst: Instance) -> Condition:
    for idx, point in enumerate(inst.X):
        for j, value in enumerate(point):
            if not is_integral(value):
                return Condition("X is integer", False, f"X point {idx} entry {j} = {format_scalar(value)}")
    return Condition("X is integer", True)


def _unimodularity(name: str, M: Mat) -> Condition:
    if not M or not M[0]:
        return Condition(name, True, "empty matrix")
    found = find_non_unimodular_submatrix(M)
    if found is None:
        return Condition(name, True)
    rows, cols = found
    if len(rows) == 1:
        return Condition(name, False, f"entry ({rows[0]}, {cols[0]}) = {format_scalar(M[rows[0]][cols[0]])}")
    return Condition(name, False, f"submatrix rows {list(rows)} cols {list(cols)} has determinant outside {{-1,0,1}}")


def check_conditions_general(inst: GeneralInstance) -> ConditionReport:
    """Integrality of X and of (T, W, h0, H), total unimodularity of [W_c  -H]."""
    bad = _first_fractional_entry([("T", inst.T), ("W_c", inst.W_c), ("W_d", inst.W_d), ("h0", inst.h0), ("H", inst.H)])
    neg_H = tuple(tuple(-a for a in row) for row in inst.H)
    conditions = (
        _x_integrality(inst),
        Condition("T, W, h0, H are integer", bad is None, bad or ""),
        _unimodularity("[W_c -H] is totally unimodular", hstack(inst.W_c, neg_H)),
    )
    report = ConditionReport("general", conditions)
    logger.info("Condition check for %s: %s", inst.name, "pass" if report.overall else "fail")
    return report


def check_conditions_indicator(inst: IndicatorInstance) -> ConditionReport:
    bad = _first_fractional_entry([("T", inst.T), ("W_c", inst.W_c), ("W_d", inst.W_d), ("h0", inst.h0)])
    conditions = (
        _x_integrality(inst),
        Condition("T, W, h0 are integer", bad is None, bad or ""),
        _unimodularity("W_c is totally unimodular", inst.W_c),
    )
    report = ConditionReport("indicator", conditions)
    logger.info("Condition check for %s: %s", inst.name, "pass" if report.overall else "fail")
    return report


def check_conditions(inst: Instance) -> ConditionReport:
    if isinstance(inst, IndicatorInstance):
        return check_conditions_indicator(inst)
    return check_conditions_general(inst)


def _box_program(inst: Instance, x: Sequence, xi: Sequence) -> LinearProgram:
    """min c(xi)'x + d(xi)'y over the box Y, constraints dropped."""
    lower = [ZERO] * inst.nc2 + list(inst.yd_lower)
    upper = list(inst.yc_upper) + list(inst.yd_upper)
    integer = [False] * inst.nc2 + [True] * inst.nd2
    offset = sum((a * b for a, b in zip(inst.c(xi), x)), ZERO)
    return LinearProgram.build(inst.d(xi), (), lower=lower, upper=upper, integer=integer, offset=offset)


def compute_u_l(inst: Instance, x: Sequence) -> Tuple[Fraction, Fraction]:
    """u = worst-case second-stage value at x, l = min over Xi and the box Y of the objective."""
    x = inst.check_x(x)
    u, _ = worst_case_Q(inst, x)
    if not is_finite(u):
        raise InfeasibleDecisionError(f"x={[format_scalar(v) for v in x]} is robust-infeasible (worst-case Q = {u})")
    l = min(solve_milp(_box_program(inst, x, xi)).objective for xi in inst.xi_points)
    if not is_finite(l):
        raise ConditionViolationError(
            "No finite lower bound l(x): the objective is unbounded below over Y", ["bounded second stage"]
        )
    return u, l


def closed_form_multiplier(u, l) -> Fraction:
    u, l = to_scalar(u), to_scalar(l)
    if u < l:
        raise InputError(f"upper bound u={u} is below lower bound l={l}")
    return u - l


@dataclass(frozen=True)
class BoundInputs:
    """Ingredients and result of the factorial multiplier bound."""

    U: Fraction
    u_source: str
    bounds_source: str
    lifted: bool
    theta1: Fraction
    theta2: Fraction
    theta3: Fraction
    case1_bound: Fraction
    case2_bound: Fraction
    lambda_bar: Fraction
    notes: Tuple[str, ...] = field(default=())

    def render(self) -> str:
        rows = [
            ("U", self.U),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("case1_bound", self.case1_bound),
            ("case2_bound", self.case2_bound),
            ("lambda_bar", self.lambda_bar),
        ]
        lines = [f"{name}\t{format_scalar(value)}" for name, value in rows]
        lines.append(f"u_source\t{self.u_source}")
        lines.append(f"bounds_source\t{self.bounds_source}")
        lines.append(f"lifted\t{str(self.lifted).lower()}")
        lines.extend(f"note\t{note}" for note in self.notes)
        return "\n".join(lines)


def _interval_upper_bound(inst: GeneralInstance) -> Tuple[Fraction, Tuple]:
    if any(u is None for u in inst.yc_upper):
        raise ConditionViolationError("Interval U needs finite yc_upper bounds", ["bounded y_c"])
    for x in inst.X:
        value, _ = worst_case_Q(inst, x)
        if is_finite(value):
            break
    else:
        raise ConditionViolationError("No robust-feasible first-stage decision exists", ["feasible x"])
    lower = [ZERO] * inst.nc2 + list(inst.yd_lower)
    upper = list(inst.yc_upper) + list(inst.yd_upper)
    best = None
    for xi in inst.xi_points:
        total = sum((a * b for a, b in zip(inst.c(xi), x)), ZERO)
        total += sum((max(dj * lo, dj * hi) for dj, lo, hi in zip(inst.d(xi), lower, upper)), ZERO)
        best = total if best is None else max(best, total)
    return best, x


def polynomial_lambda_bound(inst: GeneralInstance, u_source: str = U_BRUTEFORCE, lift: bool = False) -> BoundInputs:
    """Factorial bound on an optimal two-stage multiplier for homogeneous integer data."""
    if not isinstance(inst, GeneralInstance):
        raise InputError("The multiplier bound applies to general instances only")
    notes = []
    lifted = False
    if not inst.is_homogeneous:
        if not lift:
            raise ConditionViolationError(
                "Cost maps are not homogeneous (c0, d0, h0 must vanish); rerun with the constant-component lift",
                ["homogeneous cost maps"],
            )
        inst = inst.lift_constant_component()
        lifted = True
        notes.append("constant component prepended to xi; np counts it")

    bad = _first_fractional_entry(
        [("C", inst.C), ("D_c", inst.D_c), ("D_d", inst.D_d), ("T", inst.T), ("W_c", inst.W_c), ("W_d", inst.W_d), ("H", inst.H)]
    )
    if bad is not None:
        raise ConditionViolationError(f"Matrices must be integer: {bad}", ["integer matrices"])

    box, bounds_source = inst.effective_bounds()

    if u_source == U_BRUTEFORCE:
        U, _ = solve_two_stage_bruteforce(inst)
        if not is_finite(U):
            raise ConditionViolationError("No robust-feasible first-stage decision exists", ["feasible x"])
        notes.append("U is the enumerated two-stage optimum")
    elif u_source == U_INTERVAL:
        U, _ = _interval_upper_bound(inst)
        notes.append("U is a box bound of the objective at the first robust-feasible x")
    else:
        raise InputError(f"Unknown U source {u_source!r}")

    nc2 = inst.nc2
    theta1 = max(
        max_abs(box.x_lower),
        max_abs(box.x_upper),
        max_abs(box.y_lower[nc2:]),
        max_abs(box.y_upper[nc2:]),
        ONE,
    )
    theta2 = max(U + induced_inf_norm(inst.C) + induced_inf_norm(inst.D_d), induced_inf_norm(inst.D_c))
    theta3 = max(
        induced_inf_norm(inst.W_d) + induced_inf_norm(inst.T),
        max_abs_norm(inst.W_c),
        max_abs_norm(inst.H),
        ONE,
    )
    k = nc2 + inst.n_p
    case1 = math.factorial(k) * induced_inf_norm(inst.D_c) * max(max_abs_norm(inst.W_c), max_abs_norm(inst.H), ONE) ** (k - 1)
    case2 = math.factorial(k + 2) * theta1 ** (k + 2) * theta2 * theta3 ** (k + 1)
    lambda_bar = max(Fraction(case1), Fraction(case2), ZERO)
    logger.info("Multiplier bound for %s: %s (U=%s, %s)", inst.name, lambda_bar, U, u_source)
    return BoundInputs(
        U=Fraction(U),
        u_source=u_source,
        bounds_source=bounds_source,
        lifted=lifted,
        theta1=Fraction(theta1),
        theta2=Fraction(theta2),
        theta3=Fraction(theta3),
        case1_bound=Fraction(case1),
        case2_bound=Fraction(case2),
        lambda_bar=lambda_bar,
        notes=tuple(notes),
    )
