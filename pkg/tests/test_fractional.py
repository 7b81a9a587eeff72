import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcropt.errors import (DenominatorViolation, DimensionMismatch, InfeasibleModel,
                           InfeasiblePoint, IterationLimit, NonpositiveDenominator)
from bcropt.fractional import AffineForm, FractionalModel, evaluate_ratio, maximize_ratio, parametric_value
from bcropt.lp import LinearProgram
from bcropt.mip import MipConfig, MixedIntegerProgram

from corpus import brute_force_ratio, random_fractional


def two_binaries(b, c, b0=0.0, c0=1.0, rows=([1, 1],), senses=">", rhs=(1,)):
    lp = LinearProgram.from_dense([0, 0], rows, senses, rhs, [(0, 1), (0, 1)])
    return FractionalModel(MixedIntegerProgram(lp, "BB"), AffineForm(b, b0), AffineForm(c, c0))


def test_small_enumerable_ratio():
    # (3x1 + 2x2) / (x1 + x2 + 1) on x1 + x2 >= 1: ratios 3/2, 1, 5/3
    fm = two_binaries([3, 2], [1, 1])
    sol = maximize_ratio(fm)
    assert sol.status == "converged"
    assert sol.q_star == pytest.approx(5 / 3)
    assert np.allclose(sol.x_star, [1, 1])
    assert sol.q_star == pytest.approx(brute_force_ratio(fm))


def test_identical_forms_give_one():
    fm = two_binaries([2, 5], [2, 5], 1.0, 1.0)
    sol = maximize_ratio(fm)
    assert sol.q_star == pytest.approx(1.0)
    assert len(sol.iterations) <= 2


def test_first_iterate_is_zero():
    sol = maximize_ratio(two_binaries([3, 2], [1, 1]))
    assert sol.q_sequence[0] == 0.0


def test_evaluate_ratio():
    fm = two_binaries([100, 0], [49, 0])
    assert evaluate_ratio(fm, [1, 0]) == pytest.approx(2.0)
    with pytest.raises(InfeasiblePoint):
        evaluate_ratio(fm, [0, 0])
    with pytest.raises(InfeasiblePoint):
        evaluate_ratio(fm, [0.5, 1])
    with pytest.raises(DimensionMismatch):
        evaluate_ratio(fm, [1, 0, 0])


def test_nonpositive_denominator():
    fm = two_binaries([1, 1], [-1, 0], c0=0.0)
    with pytest.raises(NonpositiveDenominator):
        evaluate_ratio(fm, [1, 0])
    with pytest.raises(DenominatorViolation):
        maximize_ratio(fm)


def test_infeasible_model():
    fm = two_binaries([1, 1], [1, 1], rows=([1, 1],), senses=">", rhs=(3,))
    with pytest.raises(InfeasibleModel):
        maximize_ratio(fm)


def test_dimension_check():
    lp = LinearProgram.from_dense([0, 0], bounds=[(0, 1)] * 2)
    with pytest.raises(DimensionMismatch):
        FractionalModel(MixedIntegerProgram(lp, "BB"), AffineForm([1]), AffineForm([1, 1]))


def test_iteration_limit_carries_best():
    fm = random_fractional(np.random.default_rng(1), 8)
    with pytest.raises(IterationLimit) as err:
        maximize_ratio(fm, max_iter=1)
    assert err.value.best is not None


def test_bad_epsilon():
    with pytest.raises(ValueError):
        maximize_ratio(two_binaries([1, 1], [1, 1]), epsilon=0)


def test_q_one_is_profit():
    fm = random_fractional(np.random.default_rng(4))
    F1, x = parametric_value(fm, 1.0)
    profit = fm.constraints.with_objective(fm.benefit.coef - fm.cost.coef,
                                           fm.benefit.const - fm.cost.const)
    from bcropt.mip import solve_mip
    assert F1 == pytest.approx(solve_mip(profit).objective)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_matches_enumeration_and_is_monotone(seed):
    fm = random_fractional(np.random.default_rng(seed))
    sol = maximize_ratio(fm)
    assert sol.q_star == pytest.approx(brute_force_ratio(fm), abs=1e-6)
    qs = sol.q_sequence
    assert all(b >= a - 1e-12 for a, b in zip(qs, qs[1:]))
    assert sol.iterations[-1].F < sol.epsilon
    assert fm.constraints.is_feasible(sol.x_star)
    assert sol.q_star == pytest.approx(fm.ratio(sol.x_star))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(0, 5))
def test_parametric_value_decreasing(seed, q1, dq):
    fm = random_fractional(np.random.default_rng(seed))
    F1, _ = parametric_value(fm, q1)
    F2, _ = parametric_value(fm, q1 + dq)
    assert F2 <= F1 + 1e-7


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_highs_subproblems_agree(seed):
    fm = random_fractional(np.random.default_rng(seed))
    a = maximize_ratio(fm)
    b = maximize_ratio(fm, sub_cfg=MipConfig(backend="highs"))
    assert a.q_star == pytest.approx(b.q_star, abs=1e-6)
