import itertools
from dataclasses import replace
from fractions import Fraction

import pytest

from lagro.errors import DomainError, InputError, InstanceFormatError
from lagro.generators import gen_random_general, gen_random_indicator
from lagro.kernel import INF
from lagro.model import (
    UncertaintySet,
    eval_L,
    eval_L_restricted,
    eval_LI,
    eval_Q,
    eval_Q_restricted,
    eval_QI,
    penalty_phi,
    penalty_phi_indicator,
)


def test_penalty_phi():
    assert penalty_phi((0, 1), (1, 1)) == 1
    assert penalty_phi((Fraction(1, 2),), (0,)) == Fraction(1, 2)
    assert penalty_phi((1, 0, 1), (1, 0, 1)) == 0
    with pytest.raises(DomainError):
        penalty_phi((2,), (0,))
    with pytest.raises(DomainError):
        penalty_phi((0,), (2,))
    with pytest.raises(InputError):
        penalty_phi((0, 0), (0,))


def test_budget_uncertainty_points_are_sorted():
    xi = UncertaintySet(3, budget=1)
    assert xi.size() == 4
    assert xi.points == ((0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0))
    assert (0, 1, 0) in xi
    assert (1, 1, 0) not in xi


def test_explicit_uncertainty_is_deduplicated():
    xi = UncertaintySet(2, explicit=((1, 0), (0, 1), (1, 0)))
    assert xi.points == ((0, 1), (1, 0))
    with pytest.raises(InstanceFormatError):
        UncertaintySet(2, explicit=((1, 2),))
    with pytest.raises(InstanceFormatError):
        UncertaintySet(2)


def test_instance_shape_errors_are_located(counterexample):
    with pytest.raises(InstanceFormatError, match="field 'H' row 0: expected 1 entries, got 2"):
        replace(counterexample, H=((1, 1),))
    with pytest.raises(InstanceFormatError, match="X: point list is empty"):
        replace(counterexample, X=())


def test_counterexample_values(counterexample):
    x = (0,)
    assert eval_Q(counterexample, x, (0,)) == -1
    assert eval_Q(counterexample, x, (1,)) == 0
    assert eval_L(counterexample, x, (1,), 1) == Fraction(-1, 2)
    assert eval_L(counterexample, x, (1,), 2) == 0
    assert eval_L(counterexample, x, (0,), 5) == -1
    assert eval_Q_restricted(counterexample, x, (1,), (1,)) == INF
    assert eval_Q_restricted(counterexample, x, (1,), (0,)) == 0
    assert eval_L_restricted(counterexample, x, (1,), 1, (1,)) == Fraction(-1, 2)


def test_lagrangian_domain_errors(counterexample):
    with pytest.raises(DomainError):
        eval_L(counterexample, (0,), (1,), -1)
    with pytest.raises(DomainError):
        eval_L(counterexample, (0,), (2,), 1)
    with pytest.raises(InputError):
        eval_Q(counterexample, (0, 0), (1,))
    with pytest.raises(InputError):
        eval_Q_restricted(counterexample, (0,), (1,), (2,))


def test_indicator_values(restart_example):
    x = (0,)
    assert eval_QI(restart_example, x, (0,)) == 0
    assert eval_QI(restart_example, x, (1,)) == 1
    assert eval_LI(restart_example, x, (1,), Fraction(1, 2)) == Fraction(1, 2)
    assert eval_LI(restart_example, x, (1,), 3) == 1
    assert penalty_phi_indicator(restart_example, x, (Fraction(1, 4),), (1,)) == Fraction(3, 4)
    assert penalty_phi_indicator(restart_example, x, (Fraction(1, 4),), (0,)) == 0


def test_evaluators_check_instance_kind(counterexample, restart_example):
    with pytest.raises(InputError):
        eval_QI(counterexample, (0,), (1,))
    with pytest.raises(InputError):
        eval_Q(restart_example, (0,), (1,))


def test_box_rows_leave_values_unchanged():
    inst = gen_random_general(seed=4)
    folded = inst.with_box_rows()
    assert folded.m == inst.m + inst.nc2
    assert all(u is None for u in folded.yc_upper)
    for x in inst.X:
        for xi in inst.xi_points:
            assert eval_Q(folded, x, xi) == eval_Q(inst, x, xi)
            assert eval_L(folded, x, xi, 3) == eval_L(inst, x, xi, 3)


def test_lift_constant_component(counterexample):
    lifted = counterexample.lift_constant_component()
    assert lifted.is_homogeneous
    assert lifted.n_p == 2
    assert lifted.xi_points == ((1, 0), (1, 1))
    for xi in counterexample.xi_points:
        assert eval_Q(lifted, (0,), (1,) + xi) == eval_Q(counterexample, (0,), xi)


LADDER = [0, Fraction(1, 2), 1, 2, 8]


@pytest.mark.parametrize("seed", range(20))
def test_second_stage_is_the_best_restriction(seed):
    inst = gen_random_general(seed=seed)
    for x in inst.X:
        for xi in inst.xi_points:
            assert eval_Q(inst, x, xi) == min(eval_Q_restricted(inst, x, xi, y_d) for y_d in inst.yd_points)
            for lam in (0, 1, 4):
                assert eval_L(inst, x, xi, lam) == min(
                    eval_L_restricted(inst, x, xi, lam, y_d) for y_d in inst.yd_points
                )


def test_penalty_phi_vanishes_only_at_the_scenario():
    grid = (0, Fraction(1, 4), Fraction(1, 2), 1)
    for z in itertools.product(grid, repeat=2):
        for xi in itertools.product((0, 1), repeat=2):
            phi = penalty_phi(z, xi)
            assert phi >= 0
            assert (phi == 0) is (tuple(z) == xi)


@pytest.mark.parametrize("seed", range(10))
def test_indicator_lagrangian_ladder(seed):
    inst = gen_random_indicator(seed=seed)
    for x in inst.X:
        for xi in inst.xi_points:
            q = eval_QI(inst, x, xi)
            values = [eval_LI(inst, x, xi, lam) for lam in LADDER]
            assert all(value <= q for value in values)
            assert all(a <= b for a, b in zip(values, values[1:]))


def test_indicator_lagrangian_is_exact_without_indicator_rows():
    inst = gen_random_indicator(seed=3)
    plain = replace(inst, I0=((),) * inst.n_p, I1=((),) * inst.n_p)
    for x in plain.X:
        for xi in plain.xi_points:
            q = eval_QI(plain, x, xi)
            assert all(eval_LI(plain, x, xi, lam) == q for lam in LADDER)
