"""Brute-force ground truth over X, Xi and Y_d.

Every function here enumerates; nothing is clever. The rest of the package is
tested against these values.
"""
import logging
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from lagro.errors import BoundTooSmallError, DomainError, LimitExceededError
from lagro.kernel import INF, ZERO, ExtValue, to_scalar
from lagro.model import (
    Instance,
    Point,
    is_finite,
    lagrangian_value,
    second_stage_value,
)
from lagro.utils import setting, setting_scalar

logger = logging.getLogger(__name__)


def check_enumerable(inst: Instance) -> None:
    """Refuse instances whose (x, xi, y_d) enumeration exceeds the configured cap."""
    cap = setting("oracle", "max_combinations")
    total = len(inst.X) * inst.Xi.size() * len(inst.yd_points)
    if total > cap:
        raise LimitExceededError(
            f"Oracle refuses {total} (x, xi, y_d) combinations, cap is {cap}",
            {"instance": inst.name, "X": len(inst.X), "Xi": inst.Xi.size(), "Y_d": len(inst.yd_points)},
        )


def _argmax(values) -> Tuple[ExtValue, Optional[Point]]:
    best, best_xi = -INF, None
    for xi, value in values:
        if best_xi is None or value > best:
            best, best_xi = value, xi
    return best, best_xi


def worst_case_Q(inst: Instance, x: Sequence, reverse: bool = False) -> Tuple[ExtValue, Point]:
    """max over Xi of Q(x, xi); the first maximizer in enumeration order wins."""
    check_enumerable(inst)
    points = inst.xi_points[::-1] if reverse else inst.xi_points
    return _argmax((xi, second_stage_value(inst, x, xi)) for xi in points)


def worst_case_L(inst: Instance, x: Sequence, lam, reverse: bool = False) -> Tuple[ExtValue, Point]:
    lam = to_scalar(lam)
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    check_enumerable(inst)
    points = inst.xi_points[::-1] if reverse else inst.xi_points
    return _argmax((xi, lagrangian_value(inst, x, xi, lam)) for xi in points)


def solve_two_stage_bruteforce(inst: Instance) -> Tuple[ExtValue, Tuple]:
    """min over X of the worst-case second-stage value; first minimizer wins."""
    check_enumerable(inst)
    best, best_x = INF, None
    for x in inst.X:
        value, _ = worst_case_Q(inst, x)
        if best_x is None or value < best:
            best, best_x = value, x
    logger.debug("Brute force optimum of %s: %s at x=%s", inst.name, best, best_x)
    return best, best_x


def two_stage_lagrangian_value(inst: Instance, lam) -> ExtValue:
    """inf over X of sup over Xi of L(x, xi, lam)."""
    return min(worst_case_L(inst, x, lam)[0] for x in inst.X)


def min_optimal_multiplier(inst: Instance, x: Sequence, lambda_hi) -> Tuple[Fraction, Fraction]:
    """Bracket the smallest lambda with worst_case_L(lambda) = worst_case_Q.

    Returns ``(lo, hi)`` with ``hi - lo <= lambda_hi / 2**steps`` where the
    equality holds exactly at ``hi``.
    """
    lambda_hi = to_scalar(lambda_hi)
    target, _ = worst_case_Q(inst, x)
    if not is_finite(target):
        raise DomainError(f"worst-case Q at x={list(x)} is {target}; a multiplier needs a finite value")
    top, _ = worst_case_L(inst, x, lambda_hi)
    if top < target:
        raise BoundTooSmallError(f"worst-case L at lambda={lambda_hi} is {top}, below worst-case Q {target}")
    if worst_case_L(inst, x, ZERO)[0] == target:
        return ZERO, ZERO

    lo, hi = ZERO, lambda_hi
    width = lambda_hi / 2 ** setting("oracle", "bisection_steps")
    while hi - lo > width:
        mid = (lo + hi) / 2
        if worst_case_L(inst, x, mid)[0] == target:
            hi = mid
        else:
            lo = mid
    logger.debug("Optimal multiplier of %s at x=%s in [%s, %s]", inst.name, list(x), lo, hi)
    return lo, hi


def find_multiplier_upper(inst: Instance, x: Sequence, start=1) -> Fraction:
    """Double lambda from ``start`` until worst_case_L reaches worst_case_Q."""
    target, _ = worst_case_Q(inst, x)
    if not is_finite(target):
        raise DomainError(f"worst-case Q at x={list(x)} is {target}; a multiplier needs a finite value")
    lam = to_scalar(start)
    for _ in range(setting("oracle", "max_doublings")):
        if worst_case_L(inst, x, lam)[0] == target:
            return lam
        lam *= 2
    raise LimitExceededError(
        "No optimal multiplier found by doubling", {"instance": inst.name, "x": list(x), "last_lambda": lam}
    )


def check_strong_duality(inst: Instance, x: Sequence, xi: Sequence, lambda_hi, large_target=None) -> bool:
    """L(x, xi, lambda_hi) = Q(x, xi), or Q = +inf and L at least the large target."""
    q = second_stage_value(inst, x, xi)
    l = lagrangian_value(inst, x, xi, lambda_hi)
    if is_finite(q):
        return l == q
    if q == INF:
        target = large_target if large_target is not None else setting_scalar("oracle", "infeasible_target")
        return l == INF or l >= to_scalar(target)
    return l == q
