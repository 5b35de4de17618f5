from dataclasses import replace
from fractions import Fraction

import pytest

from lagro.errors import ConditionViolationError, InfeasibleDecisionError, InputError
from lagro.generators import gen_counterexample, gen_interdiction, gen_random_general, gen_restart_example
from lagro.model import is_finite
from lagro.multiplier import (
    U_INTERVAL,
    check_conditions,
    check_conditions_general,
    closed_form_multiplier,
    compute_u_l,
    polynomial_lambda_bound,
)
from lagro.oracle import (
    min_optimal_multiplier,
    solve_two_stage_bruteforce,
    two_stage_lagrangian_value,
    worst_case_L,
    worst_case_Q,
)

HOMOGENEOUS_DIMS = {"homogeneous": True, "yc_bounded": False, "magnitude": 1}


def test_counterexample_fails_integrality_condition(counterexample):
    report = check_conditions(counterexample)
    assert not report.overall
    assert [c.passed for c in report.conditions] == [True, False, True]
    assert report.failed == ["T, W, h0, H are integer"]
    assert "h0[0] = -3/2" in report.render()


def test_indicator_conditions(restart_example):
    report = check_conditions(restart_example)
    assert report.kind == "indicator"
    assert report.overall


def test_non_unimodular_recourse_is_reported(counterexample):
    inst = replace(counterexample, h0=(-1,), H=((2,),))
    report = check_conditions_general(inst)
    assert report.failed == ["[W_c -H] is totally unimodular"]
    assert "entry (0, 0) = -2" in report.render()


def test_compute_u_l_on_counterexample(counterexample):
    assert compute_u_l(counterexample, (0,)) == (0, -1)
    assert closed_form_multiplier(0, -1) == 1


@pytest.mark.parametrize("gamma", [1, 10, 100])
def test_scaled_gap_of_closed_form_multiplier(gamma):
    inst = gen_counterexample(gamma)
    u, l = compute_u_l(inst, (0,))
    lam = closed_form_multiplier(u, l)
    assert lam == gamma
    value, _ = worst_case_L(inst, (0,), lam)
    assert u - value == Fraction(gamma, 2)


def test_closed_form_multiplier_rejects_inverted_bounds():
    with pytest.raises(InputError):
        closed_form_multiplier(-1, 0)


def test_compute_u_l_on_infeasible_decision(counterexample):
    infeasible = replace(counterexample, h0=(Fraction(-1, 2),))
    with pytest.raises(InfeasibleDecisionError):
        compute_u_l(infeasible, (0,))


@pytest.mark.parametrize("seed", range(20))
def test_interdiction_closed_form_multiplier_is_exact(seed):
    inst = gen_interdiction(1 + seed % 4, seed)
    assert check_conditions_general(inst).overall
    for x in inst.X:
        target, _ = worst_case_Q(inst, x)
        if not is_finite(target):
            continue
        u, l = compute_u_l(inst, x)
        assert worst_case_L(inst, x, u - l)[0] == target


def test_bound_requires_homogeneous_data(counterexample):
    with pytest.raises(ConditionViolationError) as excinfo:
        polynomial_lambda_bound(counterexample)
    assert excinfo.value.failed == ["homogeneous cost maps"]
    # the lift moves h0 = -3/2 into H, which must be integer
    with pytest.raises(ConditionViolationError) as excinfo:
        polynomial_lambda_bound(counterexample, lift=True)
    assert excinfo.value.failed == ["integer matrices"]


def test_bound_is_for_general_instances():
    with pytest.raises(InputError):
        polynomial_lambda_bound(gen_restart_example())


def _homogeneous_suite(count):
    suite = []
    for seed in range(400):
        inst = gen_random_general(HOMOGENEOUS_DIMS, seed=seed)
        if not check_conditions_general(inst).overall:
            continue
        if not all(is_finite(worst_case_Q(inst, x)[0]) for x in inst.X):
            continue
        suite.append(inst)
        if len(suite) == count:
            return suite
    raise AssertionError(f"only {len(suite)} homogeneous instances met the conditions")


def test_polynomial_bound_is_an_optimal_multiplier():
    for inst in _homogeneous_suite(20):
        bound = polynomial_lambda_bound(inst)
        assert bound.lambda_bar == max(bound.case1_bound, bound.case2_bound, 0)

        value, x_star = solve_two_stage_bruteforce(inst)
        assert bound.U == value
        assert two_stage_lagrangian_value(inst, bound.lambda_bar) == value
        _, hi = min_optimal_multiplier(inst, x_star, bound.lambda_bar)
        assert bound.lambda_bar >= hi


def test_interval_upper_bound_dominates_optimum():
    inst = gen_random_general({**HOMOGENEOUS_DIMS, "yc_bounded": True}, seed=2)
    exact = polynomial_lambda_bound(inst)
    interval = polynomial_lambda_bound(inst, u_source=U_INTERVAL)
    assert interval.U >= exact.U
    assert interval.lambda_bar >= exact.lambda_bar
    assert "u_source\tinterval" in interval.render()
