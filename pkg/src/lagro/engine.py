"""Outer CCG / Benders loops with the inner multiplier search and ex-post verification.

For P the outer loop is column-and-constraint generation: the master picks x
over the retained scenarios R, ``ccg_inner`` bounds the worst-case
Lagrangian at that x and proposes the next scenario. For P_I (continuous
recourse) the upper bound at x is the fixed-multiplier worst-case L_I and the
outer loop is either CCG over scenarios or Benders over dual cuts.

After the bounds meet, the final x is verified with the exact dual
verification problem. A verified value above UB raises UB, replaces the
multiplier by the one extracted from the verification certificate and
resumes at the master with all retained state (R, D, cuts).
"""
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from lagro.errors import ConditionViolationError, InfeasibleDecisionError, InputError, LimitExceededError
from lagro.kernel import (
    INF,
    ONE,
    ZERO,
    ExtValue,
    LinearProgram,
    Vec,
    dot,
    mat_vec,
    solve_lp,
    solve_milp,
    sub,
    to_scalar,
)
from lagro.model import (
    GeneralInstance,
    IndicatorInstance,
    Instance,
    Point,
    eval_LI,
    lagrangian_program,
    penalty_phi,
    recession_program,
    second_stage_program,
    second_stage_value,
)
from lagro.multiplier import closed_form_multiplier, compute_u_l
from lagro.subproblems import (
    general_multiplier,
    indicator_cut_psi,
    indicator_dual_block,
    indicator_multiplier,
    psi_of,
    solve_restricted_dual,
    verify_general_bound,
    verify_indicator_bound,
)
from lagro.utils import METHOD_BENDERS, METHOD_CCG, METHODS, format_scalar, format_vector, setting, setting_scalar

logger = logging.getLogger(__name__)

Trace = Callable[[Dict[str, Any]], None]

OPTIMALITY = "optimality"
FEASIBILITY = "feasibility"

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class Cut:
    """Benders cut: optimality ``theta >= c(xi)'x + (h0 - T x)'psi`` or feasibility ``(h0 - T x)'psi <= 0``."""

    kind: str
    xi: Point
    x_gen: Vec
    lam: Fraction
    psi: Vec


@dataclass
class EngineState:
    lam: Fraction
    eps: Fraction = ZERO
    R: List[Point] = field(default_factory=list)
    D: List[Tuple[int, ...]] = field(default_factory=list)
    F: List[Point] = field(default_factory=list)
    O: List[Point] = field(default_factory=list)
    cuts: List[Cut] = field(default_factory=list)
    lb: ExtValue = -INF
    ub: ExtValue = INF
    n_restarts: int = 0
    outer_iterations: int = 0
    inner_iterations: int = 0
    first_verification: Optional[bool] = None
    q_cache: Dict[Tuple[Vec, Point], ExtValue] = field(default_factory=dict)


@dataclass(frozen=True)
class InnerOutcome:
    """Result of ``ccg_inner``: an infeasibility witness (``infeasible``) or a scenario and multiplier."""

    xi: Point
    lam: Fraction
    lb: ExtValue
    ub: ExtValue
    D: Tuple[Tuple[int, ...], ...]
    infeasible: bool
    iterations: int


@dataclass(frozen=True)
class Report:
    name: str
    kind: str
    method: str
    status: str
    value: ExtValue
    x: Optional[Vec]
    optimal: bool
    iterations: int
    inner_iterations: int
    wall_time: float
    n_restarts: int
    lam: Fraction
    witness: Optional[Point] = None

    def as_row(self) -> Dict[str, Any]:
        return {
            "instance": self.name,
            "method": self.method,
            "status": self.status,
            "value": format_scalar(self.value),
            "opt": int(self.optimal),
            "iterations": self.iterations,
            "t": round(self.wall_time, 6),
            "n_restarts": self.n_restarts,
        }

    def render(self) -> str:
        lines = [
            f"instance\t{self.name}",
            f"method\t{self.method}",
            f"status\t{self.status}",
            f"value\t{format_scalar(self.value)}",
        ]
        if self.x is not None:
            lines.append(f"x\t{format_vector(self.x)}")
        if self.witness is not None:
            lines.append(f"witness\t{format_vector(self.witness)}")
        lines += [
            f"lambda\t{format_scalar(self.lam)}",
            f"iterations\t{self.iterations}",
            f"inner_iterations\t{self.inner_iterations}",
            f"n_restarts\t{self.n_restarts}",
            f"opt\t{int(self.optimal)}",
            f"wall_time\t{self.wall_time:.6f}",
        ]
        return "\n".join(lines)


def _emit(trace: Optional[Trace], event: str, **fields) -> None:
    if trace is not None:
        trace({"event": event, **fields})


def _gap_closed(ub: ExtValue, lb: ExtValue, eps: Fraction) -> bool:
    if lb == INF:
        return True
    if ub == INF or lb == -INF:
        return False
    return ub - lb <= eps


def _remember(D: List[Tuple[int, ...]], y_d: Sequence) -> None:
    key = tuple(int(v) for v in y_d)
    if key not in D:
        D.append(key)


def slack_program(inst: GeneralInstance, x: Sequence, xi: Sequence) -> LinearProgram:
    """min e'sigma + phi(z, xi) s.t. T x + W y + sigma >= h0 + H z, y in Y, z in [0,1]^np, sigma >= 0."""
    x, xi = inst.check_x(x), inst.check_xi(xi)
    m, n_p, n2 = inst.m, inst.n_p, inst.n2
    residual = sub(inst.h0, mat_vec(inst.T, x))
    W = inst.W
    objective = (ZERO,) * n2 + tuple(1 - 2 * v for v in xi) + (ONE,) * m
    rows = [
        (W[i] + tuple(-a for a in inst.H[i]) + tuple(ONE if k == i else ZERO for k in range(m)), ">=", residual[i])
        for i in range(m)
    ]
    lower = [ZERO] * inst.nc2 + list(inst.yd_lower) + [ZERO] * (n_p + m)
    upper = list(inst.yc_upper) + list(inst.yd_upper) + [ONE] * n_p + [None] * m
    integer = [False] * inst.nc2 + [True] * inst.nd2 + [False] * (n_p + m)
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, integer=integer, offset=sum(xi, ZERO))


def ccg_inner(
    inst: GeneralInstance,
    x: Sequence,
    lambda0,
    eps=ZERO,
    D: Optional[List[Tuple[int, ...]]] = None,
    trace: Optional[Trace] = None,
) -> InnerOutcome:
    """Bound sup_xi L(x, xi, lambda) from above and below while searching for lambda.

    A feasibility phase first looks for a scenario with infeasible recourse
    (returned with ``lambda0``). Otherwise lambda is halved and then doubled
    until the Lagrangian argmin satisfies z = xi, and the loop stops once the
    restricted-dual upper bound meets the best attained value. ``D`` is
    extended in place when given.
    """
    lam = to_scalar(lambda0)
    if lam <= 0:
        raise InputError(f"lambda0 must be strictly positive, got {lam}")
    eps = to_scalar(eps)
    inst = inst.with_box_rows()
    x = inst.check_x(x)
    D = [] if D is None else D
    nc2, n2 = inst.nc2, inst.n2
    cap = setting("engine", "max_inner_iterations")
    iterations = 0

    def tick(**state):
        nonlocal iterations
        iterations += 1
        if iterations > cap:
            raise LimitExceededError(
                f"ccg_inner exceeded {cap} iterations", {"instance": inst.name, "x": list(x), **state}
            )

    xi_hat = inst.xi_points[0]
    lb, ub = -INF, INF
    while True:
        tick(phase="feasibility", lb=lb, ub=ub)
        if D:
            ub, xi_hat, _ = solve_restricted_dual(inst, x, D, 0, ONE)
        outcome = solve_milp(slack_program(inst, x, xi_hat))
        _remember(D, outcome.x[nc2:n2])
        lb = outcome.objective
        _emit(trace, "inner_iteration", phase="feasibility", iteration=iterations, lb=lb, ub=ub,
              xi=xi_hat, d_size=len(D))
        if lb > 0 or ub == 0:
            break

    if ub != 0:
        logger.info("Recourse infeasible at x=%s, xi=%s", format_vector(x), format_vector(xi_hat))
        return InnerOutcome(xi_hat, lam, lb, ub, tuple(D), True, iterations)

    lb = -INF
    while True:
        lam = lam / 2
        while True:
            lam = lam * 2
            tick(phase="optimality", lam=lam, lb=lb, ub=ub)
            ub, xi_tilde, _ = solve_restricted_dual(inst, x, D, 1, lam)
            outcome = solve_milp(lagrangian_program(inst, x, xi_tilde, lam))
            if not outcome.optimal:
                raise ConditionViolationError(
                    f"Lagrangian subproblem at xi={list(xi_tilde)} is {outcome.status.value}",
                    ["bounded second stage"],
                )
            y_hat, z_hat = outcome.x[:n2], outcome.x[n2:]
            _remember(D, y_hat[nc2:])
            gap = penalty_phi(z_hat, xi_tilde)
            _emit(trace, "inner_iteration", phase="optimality", iteration=iterations, lam=lam, lb=lb, ub=ub,
                  xi=xi_tilde, phi=gap, d_size=len(D))
            if gap == 0:
                break
        attained = dot(inst.c(xi_tilde), x) + dot(inst.d(xi_tilde), y_hat)
        if lb < attained:
            lb, xi_hat = attained, xi_tilde
        if _gap_closed(ub, lb, eps):
            break
    logger.debug("ccg_inner at x=%s: LB=%s UB=%s lambda=%s |D|=%d", format_vector(x), lb, ub, lam, len(D))
    return InnerOutcome(xi_hat, lam, lb, ub, tuple(D), False, iterations)


def ccg_master(inst: Instance, R: Sequence[Point], cache: Optional[Dict] = None) -> Tuple[Vec, ExtValue]:
    """min over X of max over R of the second-stage value; first minimizer wins."""
    if not inst.X:
        raise InputError("X is empty")
    if not R:
        raise InputError("The scenario set R is empty")
    cache = {} if cache is None else cache
    best_x, best = None, INF
    for x in inst.X:
        worst = -INF
        for xi in R:
            key = (tuple(x), tuple(xi))
            if key not in cache:
                cache[key] = second_stage_value(inst, x, xi)
            worst = max(worst, cache[key])
            if worst == INF:
                break
        if best_x is None or worst < best:
            best, best_x = worst, x
    return best_x, best


def _cut_value(inst: IndicatorInstance, cut: Cut, x: Sequence) -> ExtValue:
    residual = sub(inst.h0, mat_vec(inst.T, x))
    value = dot(residual, cut.psi)
    if cut.kind == OPTIMALITY:
        value += dot(inst.c(cut.xi), x)
    return value


def benders_master(inst: IndicatorInstance, state: EngineState) -> Tuple[Vec, ExtValue]:
    """min over X of theta under the stored cuts; -inf without optimality cuts, +inf when every x is cut off."""
    if not inst.X:
        raise InputError("X is empty")
    best_x, best = None, INF
    for x in inst.X:
        if any(_cut_value(inst, cut, x) > 0 for cut in state.cuts if cut.kind == FEASIBILITY):
            continue
        theta = max((_cut_value(inst, cut, x) for cut in state.cuts if cut.kind == OPTIMALITY), default=-INF)
        if best_x is None or theta < best:
            best, best_x = theta, x
    if best_x is None:
        return inst.X[0], INF
    return best_x, best


def _lift_cuts(inst: IndicatorInstance, state: EngineState, lam: Fraction) -> None:
    """Regenerate optimality cuts at their (x, xi) with the new multiplier; old cuts stay valid if a re-solve fails."""
    lifted = []
    for cut in state.cuts:
        if cut.kind != OPTIMALITY:
            lifted.append(cut)
            continue
        outcome = solve_lp(indicator_dual_block(inst, cut.x_gen, cut.xi, lam))
        if outcome.optimal:
            lifted.append(Cut(OPTIMALITY, cut.xi, cut.x_gen, lam, psi_of(inst, outcome.x)))
        else:
            lifted.append(cut)
    state.cuts = lifted
    logger.debug("Lifted %d cuts to lambda=%s", len(lifted), lam)


def default_lambda0(inst: Instance, x: Sequence) -> Fraction:
    """max{1, u(x) - l(x)}, or 1 when u - l is not available at x."""
    try:
        u, l = compute_u_l(inst, x)
    except (InfeasibleDecisionError, ConditionViolationError, LimitExceededError) as error:
        logger.info("Falling back to lambda0 = 1 (%s)", error)
        return ONE
    return max(ONE, closed_form_multiplier(u, l))


def _initial_lambda(inst: Instance, lambda0, first_x: Sequence) -> Tuple[Fraction, str]:
    candidates = (
        (lambda0, "argument"),
        (inst.lambda0, "instance file"),
        (setting_scalar("engine", "lambda0"), "config"),
    )
    for value, source in candidates:
        if value is None:
            continue
        lam = to_scalar(value)
        if lam <= 0:
            raise InputError(f"lambda0 must be strictly positive, got {lam} ({source})")
        return lam, source
    return default_lambda0(inst, first_x), "max{1, u-l}"


def check_bounded_second_stage(inst: Instance) -> None:
    """Raise when some scenario has a ray r >= 0 with W_c r >= 0 and d_c(xi)'r < 0."""
    if inst.nc2 == 0:
        return
    for xi in inst.xi_points:
        outcome = solve_lp(recession_program(inst, xi))
        if outcome.objective < 0:
            raise ConditionViolationError(
                f"{inst.name}: second stage is unbounded below at xi={format_vector(xi)} "
                f"along y_c = {format_vector(outcome.x)}",
                ["bounded second stage"],
            )


def _unbounded_lagrangian(inst: Instance, x: Sequence, lam: Fraction) -> ConditionViolationError:
    return ConditionViolationError(
        f"{inst.name}: fixed-multiplier Lagrangian is unbounded below at x={format_vector(x)}, lambda={lam}",
        ["bounded second stage"],
    )


def _add_scenario(R: List[Point], xi: Point) -> None:
    if tuple(xi) not in R:
        R.append(tuple(xi))


def _tick_outer(inst: Instance, state: EngineState) -> None:
    state.outer_iterations += 1
    cap = setting("engine", "max_outer_iterations")
    if state.outer_iterations > cap:
        raise LimitExceededError(
            f"Outer loop exceeded {cap} iterations",
            {"instance": inst.name, "lb": state.lb, "ub": state.ub, "lambda": state.lam, "R": len(state.R)},
        )


def _record_verification(state: EngineState, passed: bool) -> None:
    if state.first_verification is None:
        state.first_verification = passed


def _restart(inst: Instance, state: EngineState, z: ExtValue, lam_bar: Fraction, trace: Optional[Trace]) -> Fraction:
    state.n_restarts += 1
    cap = setting("engine", "max_restarts")
    if state.n_restarts > cap:
        raise LimitExceededError(
            f"More than {cap} restarts", {"instance": inst.name, "ub": state.ub, "z": z, "lambda": state.lam}
        )
    state.ub = z
    new_lam = lam_bar if lam_bar > 0 else state.lam
    logger.info("Restart %d on %s: UB <- %s, lambda <- %s", state.n_restarts, inst.name, z, new_lam)
    _emit(trace, "restart", n_restarts=state.n_restarts, ub=z, lam=new_lam)
    return new_lam


def _infeasibility_witness(inst: Instance, state: EngineState) -> Optional[Point]:
    x = tuple(inst.X[0])
    for cut in state.cuts:
        if cut.kind == FEASIBILITY and _cut_value(inst, cut, x) > 0:
            return cut.xi
    return next((xi for xi in state.R if state.q_cache.get((x, xi)) == INF), None)


def _run_general(inst: GeneralInstance, state: EngineState, trace: Optional[Trace]) -> Vec:
    while True:
        _tick_outer(inst, state)
        x_hat, state.lb = ccg_master(inst, state.R, state.q_cache)
        if state.lb == INF:
            return x_hat
        inner = ccg_inner(inst, x_hat, state.lam, state.eps, D=state.D, trace=trace)
        state.inner_iterations += inner.iterations
        _emit(trace, "outer_iteration", iteration=state.outer_iterations, x=x_hat, lb=state.lb,
              ub=min(state.ub, inner.ub) if not inner.infeasible else state.ub, lam=inner.lam,
              xi=inner.xi, r_size=len(state.R), d_size=len(state.D))
        if inner.infeasible:
            _add_scenario(state.R, inner.xi)
            continue
        state.ub = min(state.ub, inner.ub)
        state.lam = inner.lam
        if not _gap_closed(state.ub, state.lb, state.eps):
            _add_scenario(state.R, inner.xi)
            continue

        z, xi_z, cert = verify_general_bound(inst, x_hat, state.D)
        _emit(trace, "verify", x=x_hat, z=z, ub=state.ub, xi=xi_z)
        if z == INF:
            # some xi has no feasible recourse among D: extend D, or keep the scenario
            _record_verification(state, False)
            outcome = solve_milp(second_stage_program(inst, x_hat, xi_z))
            if outcome.optimal:
                _remember(state.D, outcome.x[inst.nc2:])
            else:
                _add_scenario(state.R, xi_z)
            continue
        if state.ub < z:
            _record_verification(state, False)
            lam_bar = general_multiplier(cert.mus, cert.rhos, inst.H, inst.n_p)
            state.lam = _restart(inst, state, z, lam_bar, trace)
            continue
        _record_verification(state, True)
        return x_hat


def _indicator_upper_bound(inst: IndicatorInstance, x: Sequence, lam: Fraction) -> Tuple[ExtValue, Point]:
    best, best_xi = -INF, None
    for xi in inst.xi_points:
        value = eval_LI(inst, x, xi, lam)
        if best_xi is None or value > best:
            best, best_xi = value, xi
    return best, best_xi


def _run_indicator(inst: IndicatorInstance, state: EngineState, method: str, trace: Optional[Trace]) -> Vec:
    while True:
        _tick_outer(inst, state)
        if method == METHOD_CCG:
            x_hat, state.lb = ccg_master(inst, state.R, state.q_cache)
        else:
            x_hat, state.lb = benders_master(inst, state)
        if state.lb == INF:
            return x_hat

        state.inner_iterations += 1
        if method == METHOD_CCG:
            value, xi_hat = _indicator_upper_bound(inst, x_hat, state.lam)
            if value == -INF:
                raise _unbounded_lagrangian(inst, x_hat, state.lam)
            if value == INF:
                _add_scenario(state.R, xi_hat)
                continue
        else:
            value, xi_hat, cert = verify_indicator_bound(inst, x_hat, lam=state.lam)
            if value == -INF:
                raise _unbounded_lagrangian(inst, x_hat, state.lam)
            if value == INF:
                state.cuts.append(Cut(FEASIBILITY, xi_hat, x_hat, state.lam, cert.ray))
                _add_scenario(state.F, xi_hat)
                continue
            state.cuts.append(Cut(OPTIMALITY, xi_hat, x_hat, state.lam, indicator_cut_psi(inst, cert)))
            _add_scenario(state.O, xi_hat)

        state.ub = min(state.ub, value)
        _emit(trace, "outer_iteration", iteration=state.outer_iterations, x=x_hat, lb=state.lb, ub=state.ub,
              lam=state.lam, xi=xi_hat, r_size=len(state.R), cuts=len(state.cuts))
        if not _gap_closed(state.ub, state.lb, state.eps):
            if method == METHOD_CCG:
                _add_scenario(state.R, xi_hat)
            continue

        z, xi_z, cert = verify_indicator_bound(inst, x_hat)
        _emit(trace, "verify", x=x_hat, z=z, ub=state.ub, xi=xi_z)
        if z == INF:
            _record_verification(state, False)
            if method == METHOD_CCG:
                _add_scenario(state.R, xi_z)
            else:
                state.cuts.append(Cut(FEASIBILITY, xi_z, x_hat, state.lam, cert.ray))
                _add_scenario(state.F, xi_z)
            continue
        if state.ub < z:
            _record_verification(state, False)
            block = cert.blocks[0]
            new_lam = _restart(inst, state, z, indicator_multiplier(block.rho, block.nu), trace)
            if method == METHOD_BENDERS and new_lam > state.lam:
                _lift_cuts(inst, state, new_lam)
            state.lam = new_lam
            continue
        _record_verification(state, True)
        return x_hat


def solve_with_restarts(
    inst: Instance,
    method: str = METHOD_CCG,
    eps=None,
    lambda0=None,
    trace: Optional[Trace] = None,
) -> Tuple[ExtValue, Optional[Vec], Report]:
    """Solve P (CCG) or P_I with continuous recourse (CCG or Benders) exactly.

    Returns ``(value, x, report)``; a robust-infeasible instance yields
    ``value = +inf`` and a witness scenario in the report.
    """
    if method not in METHODS:
        raise InputError(f"Unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if isinstance(inst, GeneralInstance) and method == METHOD_BENDERS:
        raise InputError("Benders is available for indicator instances only; use ccg for general instances")
    if isinstance(inst, IndicatorInstance) and not inst.continuous_second_stage:
        raise InputError("The indicator engine needs a continuous second stage (nd2 = 0)")
    check_bounded_second_stage(inst)

    started = time.perf_counter()
    inst = inst.with_box_rows()
    eps = setting_scalar("engine", "eps") if eps is None else to_scalar(eps)
    if eps < 0:
        raise InputError(f"eps must be nonnegative, got {eps}")

    state = EngineState(lam=ONE, eps=eps, R=[inst.xi_points[0]])
    first_x, _ = ccg_master(inst, state.R, state.q_cache)
    state.lam, source = _initial_lambda(inst, lambda0, first_x)
    logger.info("Solving %s (%s, %s) with lambda0=%s from %s", inst.name, inst.kind, method, state.lam, source)

    if isinstance(inst, GeneralInstance):
        x_star = _run_general(inst, state, trace)
    else:
        x_star = _run_indicator(inst, state, method, trace)

    infeasible = state.lb == INF
    value = INF if infeasible else state.ub
    witness = _infeasibility_witness(inst, state) if infeasible else None
    report = Report(
        name=inst.name,
        kind=inst.kind,
        method=method,
        status=STATUS_INFEASIBLE if infeasible else STATUS_OPTIMAL,
        value=value,
        x=None if infeasible else tuple(x_star),
        optimal=infeasible or bool(state.first_verification),
        iterations=state.outer_iterations,
        inner_iterations=state.inner_iterations,
        wall_time=time.perf_counter() - started,
        n_restarts=state.n_restarts,
        lam=state.lam,
        witness=witness,
    )
    _emit(trace, "done", value=value, x=report.x, n_restarts=state.n_restarts, lam=state.lam,
          iterations=state.outer_iterations, status=report.status)
    logger.info("%s: value=%s after %d iterations and %d restarts", inst.name, value, report.iterations, report.n_restarts)
    return value, report.x, report
