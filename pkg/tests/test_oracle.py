from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from lagro.errors import BoundTooSmallError, DomainError, LimitExceededError
from lagro.generators import gen_counterexample, gen_random_general
from lagro.model import UncertaintySet, eval_L, eval_Q
from lagro.oracle import (
    check_strong_duality,
    find_multiplier_upper,
    min_optimal_multiplier,
    solve_two_stage_bruteforce,
    two_stage_lagrangian_value,
    worst_case_L,
    worst_case_Q,
)

LAMBDAS = [0, Fraction(1, 2), 1, Fraction(3, 2), 2, 3, 4]


@pytest.mark.parametrize("lam", LAMBDAS)
def test_counterexample_worst_case_lagrangian(counterexample, lam):
    lam = Fraction(lam)
    value, _ = worst_case_L(counterexample, (0,), lam)
    assert value == max(Fraction(-1), min(Fraction(0), lam / 2 - 1))


def test_counterexample_bruteforce(counterexample):
    value, x = solve_two_stage_bruteforce(counterexample)
    assert value == 0
    assert x == (0,)
    assert worst_case_Q(counterexample, (0,)) == (0, (1,))


def test_closed_form_multiplier_is_not_optimal_on_counterexample(counterexample):
    value, _ = worst_case_L(counterexample, (0,), 1)
    assert value == Fraction(-1, 2)
    assert value != worst_case_Q(counterexample, (0,))[0]
    assert two_stage_lagrangian_value(counterexample, 1) == Fraction(-1, 2)


def test_first_maximizer_wins_and_reverse_order(counterexample):
    # at lambda = 0 both scenarios give -1
    assert worst_case_L(counterexample, (0,), 0) == (-1, (0,))
    assert worst_case_L(counterexample, (0,), 0, reverse=True) == (-1, (1,))


def test_min_optimal_multiplier_brackets_two(counterexample):
    lo, hi = min_optimal_multiplier(counterexample, (0,), 4)
    assert hi == 2
    assert lo < 2
    assert hi - lo <= Fraction(4, 2**20)


def test_min_optimal_multiplier_rejects_small_upper_end(counterexample):
    with pytest.raises(BoundTooSmallError):
        min_optimal_multiplier(counterexample, (0,), 1)


def test_min_optimal_multiplier_zero_when_penalty_is_not_needed():
    inst = gen_counterexample()
    # with the single scenario xi = 0 the Lagrangian is exact at lambda = 0
    single = replace(inst, Xi=UncertaintySet(1, explicit=((0,),)))
    assert min_optimal_multiplier(single, (0,), 1) == (0, 0)


def test_find_multiplier_upper(counterexample):
    assert find_multiplier_upper(counterexample, (0,)) == 2
    assert find_multiplier_upper(counterexample, (0,), start=Fraction(1, 8)) == 2


def test_strong_duality_check(counterexample):
    assert check_strong_duality(counterexample, (0,), (1,), 2)
    assert not check_strong_duality(counterexample, (0,), (1,), 1)


def test_enumeration_cap(counterexample, config_file):
    config_file({"oracle": {"max_combinations": 2}})
    with pytest.raises(LimitExceededError):
        worst_case_Q(counterexample, (0,))


def test_negative_lambda_is_refused(counterexample):
    with pytest.raises(DomainError):
        worst_case_L(counterexample, (0,), -1)


def test_weak_duality_and_monotone_ladder():
    """200 (instance, x, xi) draws: L <= Q and L nondecreasing along a lambda ladder."""
    ladder = [0, Fraction(1, 2), 1, 2, 4, 16]
    rng = np.random.default_rng(7)
    draws = 0
    for seed in range(20):
        inst = gen_random_general(seed=seed)
        for _ in range(10):
            x = inst.X[int(rng.integers(len(inst.X)))]
            xi = inst.xi_points[int(rng.integers(len(inst.xi_points)))]
            q = eval_Q(inst, x, xi)
            values = [eval_L(inst, x, xi, lam) for lam in ladder]
            assert all(value <= q for value in values)
            assert all(a <= b for a, b in zip(values, values[1:]))
            draws += 1
    assert draws == 200
