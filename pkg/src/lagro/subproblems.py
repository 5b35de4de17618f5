"""Dual linear programs behind the engine.

All three families enumerate xi and, for a fixed xi, solve one small LP per
retained discrete decision y_d ("block"). A fixed-xi value is the minimum
over blocks, the reported value the maximum over xi (first maximizer wins).

* restricted dual: the LP dual of the restricted Lagrangian (``tau = 1``) or
  of the slack feasibility problem (``tau = 0``);
* general verification: the LP dual of the restricted second stage, whose
  value is sup_xi min_{y_d in D} Q(x, xi; y_d);
* indicator verification: the LP dual of the indicator second stage with
  continuous recourse, with multipliers rho (xi_j = 1) and nu (xi_j = 0)
  for the indicator rows. With ``lam`` given, rho and nu are pinned to
  ``lam * xi`` and ``lam * (1 - xi)`` and the value is L_I(x, xi, lam).
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from lagro.errors import ConditionViolationError, DomainError, InputError
from lagro.kernel import (
    INF,
    ONE,
    ZERO,
    ExtValue,
    LinearProgram,
    Mat,
    RowSense,
    Status,
    Vec,
    add,
    dot,
    mat_vec,
    max_abs,
    scale,
    solve_lp,
    sub,
    to_scalar,
    vec,
    vec_mat,
)
from lagro.model import GeneralInstance, IndicatorInstance, Point, is_finite

logger = logging.getLogger(__name__)

RESTRICTED_DUAL = "restricted-dual"
GENERAL_VERIFICATION = "general-verification"
INDICATOR_VERIFICATION = "indicator-verification"


@dataclass(frozen=True)
class CertificateBlock:
    y_d: Vec
    mu: Vec
    beta: Optional[Vec] = None
    rho: Optional[Vec] = None
    nu: Optional[Vec] = None
    value: ExtValue = -INF


@dataclass(frozen=True)
class DualCertificate:
    """Dual solution certifying a value at a scenario.

    ``eta`` is the certified value; ``ray`` carries a dual ray in psi-space
    when an indicator verification is unbounded (robust infeasibility).
    """

    problem: str
    xi: Point
    eta: ExtValue
    blocks: Tuple[CertificateBlock, ...]
    ray: Optional[Vec] = None

    @property
    def mus(self) -> Tuple[Vec, ...]:
        return tuple(b.mu for b in self.blocks)

    @property
    def rhos(self) -> Tuple[Vec, ...]:
        return tuple(b.rho for b in self.blocks)


def _check_lambda(lam):
    lam = to_scalar(lam)
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    return lam


def _solve_blocks(lps: Sequence[LinearProgram]) -> Tuple[ExtValue, List[Optional[Vec]], List]:
    """eta = min over block values; every returned point has value >= eta when eta is finite."""
    outcomes = [solve_lp(lp) for lp in lps]
    eta = min(o.objective for o in outcomes)
    points: List[Optional[Vec]] = []
    for lp, outcome in zip(lps, outcomes):
        if outcome.status is Status.OPTIMAL:
            points.append(outcome.x)
        elif outcome.status is Status.UNBOUNDED:
            if eta == INF:
                points.append(outcome.x)
                continue
            gain = dot(lp.objective, outcome.ray)
            step = max(ZERO, (eta - lp.value_at(outcome.x)) / gain)
            points.append(add(outcome.x, scale(step, outcome.ray)))
        else:
            points.append(None)
    return eta, points, outcomes


def _row_violations(lp: LinearProgram, point: Sequence, label: str) -> List[str]:
    problems = []
    for j, value in enumerate(point):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo is not None and value < lo:
            problems.append(f"{label}: variable {j} = {value} below {lo}")
        if hi is not None and value > hi:
            problems.append(f"{label}: variable {j} = {value} above {hi}")
    for i, (row, sense, rhs) in enumerate(zip(lp.matrix, lp.row_senses, lp.rhs)):
        lhs = dot(row, point)
        ok = {RowSense.LE: lhs <= rhs, RowSense.GE: lhs >= rhs, RowSense.EQ: lhs == rhs}[sense]
        if not ok:
            problems.append(f"{label}: row {i} has {lhs} {sense.value} {rhs} violated")
    return problems


def restricted_dual_block(inst: GeneralInstance, x: Vec, xi: Point, y_d: Vec, tau: int, lam) -> LinearProgram:
    """Variables (mu, beta); value = restricted Lagrangian (tau=1) or slack problem (tau=0) at y_d."""
    m, n_p = inst.m, inst.n_p
    residual = sub(sub(inst.h0, mat_vec(inst.T, x)), mat_vec(inst.W_d, y_d))
    objective = residual + (-ONE,) * n_p
    offset = tau * (dot(inst.c(xi), x) + dot(inst.d_d(xi), y_d)) + lam * sum(xi, ZERO)
    rows = []
    d_c = inst.d_c(xi)
    for col in range(inst.nc2):
        rows.append((tuple(inst.W_c[i][col] for i in range(m)) + (ZERO,) * n_p, "<=", tau * d_c[col]))
    for j in range(n_p):
        coeffs = tuple(-inst.H[i][j] for i in range(m)) + tuple(-ONE if k == j else ZERO for k in range(n_p))
        rows.append((coeffs, "<=", lam * (1 - 2 * xi[j])))
    upper = [ONE if tau == 0 else None] * m + [None] * n_p
    return LinearProgram.build(objective, rows, upper=upper, sense="max", offset=offset)


def solve_restricted_dual(inst: GeneralInstance, x: Sequence, D: Sequence, tau: int, lam) -> Tuple[ExtValue, Point, DualCertificate]:
    """max over xi of min over y_d in D of the restricted dual; an unbounded xi is a witness."""
    if not D:
        raise InputError("The set of retained discrete decisions D is empty")
    if tau not in (0, 1):
        raise InputError(f"tau must be 0 or 1, got {tau}")
    lam = _check_lambda(lam)
    inst = inst.with_box_rows()
    x = inst.check_x(x)
    D = [inst.check_yd(y_d) for y_d in D]
    best: Optional[DualCertificate] = None
    for xi in inst.xi_points:
        lps = [restricted_dual_block(inst, x, xi, y_d, tau, lam) for y_d in D]
        eta, points, _ = _solve_blocks(lps)
        if best is not None and not eta > best.eta:
            continue
        blocks = tuple(
            CertificateBlock(
                y_d=y_d,
                mu=point[: inst.m] if point else (),
                beta=point[inst.m:] if point else (),
                value=lp.value_at(point) if point else -INF,
            )
            for y_d, lp, point in zip(D, lps, points)
        )
        best = DualCertificate(RESTRICTED_DUAL, xi, eta, blocks)
    logger.debug("Restricted dual (tau=%s, lambda=%s): %s at xi=%s", tau, lam, best.eta, best.xi)
    return best.eta, best.xi, best


def general_verification_block(inst: GeneralInstance, x: Vec, xi: Point, y_d: Vec) -> LinearProgram:
    """Variables (mu, rho); rho_j is free but capped by (H'mu)_j when xi_j = 1 and fixed to 0 otherwise."""
    m, n_p = inst.m, inst.n_p
    residual = sub(sub(inst.h0, mat_vec(inst.T, x)), mat_vec(inst.W_d, y_d))
    objective = residual + (ONE,) * n_p
    offset = dot(inst.c(xi), x) + dot(inst.d_d(xi), y_d)
    rows = []
    d_c = inst.d_c(xi)
    for col in range(inst.nc2):
        rows.append((tuple(inst.W_c[i][col] for i in range(m)) + (ZERO,) * n_p, "<=", d_c[col]))
    for j in range(n_p):
        if xi[j] == 1:
            coeffs = tuple(-inst.H[i][j] for i in range(m)) + tuple(ONE if k == j else ZERO for k in range(n_p))
            rows.append((coeffs, "<=", ZERO))
    lower = [ZERO] * m + [None if v == 1 else ZERO for v in xi]
    upper = [None] * m + [None if v == 1 else ZERO for v in xi]
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, sense="max", offset=offset)


def verify_general_bound(inst: GeneralInstance, x: Sequence, D: Sequence) -> Tuple[ExtValue, Point, DualCertificate]:
    """sup over xi of min over y_d in D of Q(x, xi; y_d), with the dual certificate at the maximizer."""
    if not D:
        raise InputError("The set of retained discrete decisions D is empty")
    inst = inst.with_box_rows()
    x = inst.check_x(x)
    D = [inst.check_yd(y_d) for y_d in D]
    best: Optional[DualCertificate] = None
    for xi in inst.xi_points:
        lps = [general_verification_block(inst, x, xi, y_d) for y_d in D]
        eta, points, _ = _solve_blocks(lps)
        if best is not None and not eta > best.eta:
            continue
        blocks = tuple(
            CertificateBlock(
                y_d=y_d,
                mu=point[: inst.m] if point else (),
                rho=point[inst.m:] if point else (),
                value=lp.value_at(point) if point else -INF,
            )
            for y_d, lp, point in zip(D, lps, points)
        )
        best = DualCertificate(GENERAL_VERIFICATION, xi, eta, blocks)
    logger.debug("General verification at x=%s: %s at xi=%s", list(x), best.eta, best.xi)
    return best.eta, best.xi, best


def general_multiplier(mus: Sequence[Vec], rhos: Sequence[Vec], H: Mat, n_p: Optional[int] = None) -> object:
    """max over blocks of max(|rho|_inf, |H' mu|_inf)."""
    if n_p is None:
        n_p = len(H[0]) if H else 0
    best = ZERO
    for mu, rho in zip(mus, rhos):
        best = max(best, max_abs(rho or ()), max_abs(vec_mat(mu, H, n_p)) if mu else ZERO)
    return best


def lift_certificate(cert: DualCertificate, lam) -> DualCertificate:
    """Map a general-verification certificate to the restricted dual at (tau, lambda) = (1, lam): beta = lam*xi - rho."""
    lam = _check_lambda(lam)
    xi = vec(cert.xi)
    blocks = tuple(
        CertificateBlock(y_d=b.y_d, mu=b.mu, beta=sub(scale(lam, xi), b.rho), value=b.value) for b in cert.blocks
    )
    return DualCertificate(RESTRICTED_DUAL, cert.xi, cert.eta, blocks)


def check_restricted_dual_certificate(
    inst: GeneralInstance, x: Sequence, tau: int, lam, cert: DualCertificate
) -> List[str]:
    """Row-by-row feasibility of a restricted-dual certificate (including eta <= every block value)."""
    lam = _check_lambda(lam)
    inst = inst.with_box_rows()
    x = inst.check_x(x)
    problems = []
    for k, block in enumerate(cert.blocks):
        lp = restricted_dual_block(inst, x, cert.xi, inst.check_yd(block.y_d), tau, lam)
        point = tuple(block.mu) + tuple(block.beta)
        if len(point) != lp.num_vars:
            problems.append(f"block {k}: certificate has {len(point)} entries, expected {lp.num_vars}")
            continue
        problems.extend(_row_violations(lp, point, f"block {k}"))
        if cert.eta > lp.value_at(point):
            problems.append(f"block {k}: eta {cert.eta} exceeds block value {lp.value_at(point)}")
    return problems


def _require_continuous(inst: IndicatorInstance) -> None:
    if not isinstance(inst, IndicatorInstance):
        raise InputError("Indicator verification needs an indicator instance")
    if inst.nd2:
        raise InputError("Indicator verification needs a continuous second stage (nd2 = 0)")


def indicator_dual_block(inst: IndicatorInstance, x: Vec, xi: Point, lam=None) -> LinearProgram:
    """Variables (mu, rho, nu); psi = mu - sum_j rho_j e_{I1_j} - sum_j nu_j e_{I0_j}."""
    m, n_p, n2 = inst.m, inst.n_p, inst.n2
    residual = sub(inst.h0, mat_vec(inst.T, x))
    W = inst.W
    objective = (
        residual
        + tuple(-sum((residual[i] for i in inst.I1[j]), ZERO) for j in range(n_p))
        + tuple(-sum((residual[i] for i in inst.I0[j]), ZERO) for j in range(n_p))
    )
    rows = []
    d = inst.d(xi)
    for col in range(n2):
        coeffs = (
            tuple(W[i][col] for i in range(m))
            + tuple(-sum((W[i][col] for i in inst.I1[j]), ZERO) for j in range(n_p))
            + tuple(-sum((W[i][col] for i in inst.I0[j]), ZERO) for j in range(n_p))
        )
        rows.append((coeffs, "<=", d[col]))
    if lam is None:
        rho_upper = [None if v == 1 else ZERO for v in xi]
        nu_upper = [ZERO if v == 1 else None for v in xi]
        lower = [ZERO] * (m + 2 * n_p)
        upper = [None] * m + rho_upper + nu_upper
    else:
        lam = _check_lambda(lam)
        pinned = [lam * v for v in xi] + [lam * (1 - v) for v in xi]
        lower = [ZERO] * m + pinned
        upper = [None] * m + pinned
    return LinearProgram.build(objective, rows, lower=lower, upper=upper, sense="max", offset=dot(inst.c(xi), x))


def psi_of(inst: IndicatorInstance, point: Sequence) -> Vec:
    m, n_p = inst.m, inst.n_p
    mu, rho, nu = point[:m], point[m : m + n_p], point[m + n_p :]
    psi = list(mu)
    for j in range(n_p):
        for i in inst.I1[j]:
            psi[i] -= rho[j]
        for i in inst.I0[j]:
            psi[i] -= nu[j]
    return tuple(psi)


def verify_indicator_bound(inst: IndicatorInstance, x: Sequence, lam=None) -> Tuple[ExtValue, Point, DualCertificate]:
    """Worst-case indicator second stage through its LP dual (``lam`` pins the indicator multipliers)."""
    _require_continuous(inst)
    inst = inst.with_box_rows()
    x = inst.check_x(x)
    m, n_p = inst.m, inst.n_p
    best: Optional[DualCertificate] = None
    for xi in inst.xi_points:
        lp = indicator_dual_block(inst, x, xi, lam)
        outcome = solve_lp(lp)
        if best is not None and not outcome.objective > best.eta:
            continue
        ray = None
        if outcome.status is Status.UNBOUNDED:
            ray = psi_of(inst, outcome.ray)
        point = outcome.x
        block = CertificateBlock(
            y_d=(),
            mu=point[:m] if point else (),
            rho=point[m : m + n_p] if point else (),
            nu=point[m + n_p :] if point else (),
            value=outcome.objective,
        )
        best = DualCertificate(INDICATOR_VERIFICATION, xi, outcome.objective, (block,), ray=ray)
    logger.debug("Indicator verification at x=%s: %s at xi=%s", list(x), best.eta, best.xi)
    return best.eta, best.xi, best


def indicator_multiplier(rho: Sequence, nu: Sequence) -> object:
    """max(|rho|_inf, |nu|_inf) over entries."""
    return max(max_abs(rho), max_abs(nu))


def indicator_cut_psi(inst: IndicatorInstance, cert: DualCertificate) -> Vec:
    block = cert.blocks[0]
    if not is_finite(block.value):
        raise ConditionViolationError(
            f"No finite dual point at xi={list(cert.xi)} (value {block.value}); cannot build an optimality cut",
            ["bounded second stage"],
        )
    return psi_of(inst.with_box_rows(), tuple(block.mu) + tuple(block.rho) + tuple(block.nu))
