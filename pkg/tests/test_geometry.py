from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walshuniv.exactnum import QS2
from walshuniv.geometry import (DyadicInterval, DyadicSet, GridBudgetError,
                                StepFunction, step_from_json, step_to_json)


def iv(l, K):
    return DyadicInterval(K, l)


@st.composite
def small_sets(draw):
    n = draw(st.integers(0, 6))
    ivs = []
    for _ in range(n):
        K = draw(st.integers(0, 5))
        l = draw(st.integers(0, (1 << K) - 1))
        ivs.append(iv(l, K))
    return DyadicSet(ivs)


def test_union_merges_siblings():
    s = DyadicSet([iv(0, 1), iv(1, 1)])
    assert s == DyadicSet.unit()
    assert len(s.intervals) == 1


def test_union_does_not_merge_nonsiblings():
    # [1/4,1/2) u [1/2,3/4) is not a dyadic interval
    s = DyadicSet([iv(1, 2), iv(2, 2)])
    assert len(s.intervals) == 2
    assert s.measure == Fraction(1, 2)


def test_complement():
    s = DyadicSet([iv(1, 2)])  # [1/4,1/2)
    c = s.complement_in_unit()
    assert c == DyadicSet([iv(0, 2), iv(1, 1)])
    assert c.measure == Fraction(3, 4)


def test_measure_example():
    s = DyadicSet([iv(0, 3), iv(3, 3)])
    assert s.measure == Fraction(1, 4)


@given(small_sets(), small_sets())
@settings(max_examples=150)
def test_boolean_laws(a, b):
    assert a.union(b) == b.union(a)
    assert a.intersect(b) == b.intersect(a)
    # de Morgan
    assert a.union(b).complement_in_unit() == \
        a.complement_in_unit().intersect(b.complement_in_unit())
    # inclusion-exclusion on measures
    assert a.union(b).measure == a.measure + b.measure - a.intersect(b).measure


@given(small_sets())
def test_complement_measure(a):
    assert a.measure + a.complement_in_unit().measure == 1
    assert a.intersect(a.complement_in_unit()).is_empty()


@given(small_sets())
def test_measure_within_consistent(a):
    probe = iv(1, 2)
    assert a.measure_within(probe) == a.intersect(DyadicSet([probe])).measure


def test_step_function_integrate():
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(-1)])
    assert f.integrate_over() == QS2(2)
    w = StepFunction.constant(1)
    assert f.integrate_over(weight=w) == QS2(2)


def test_step_weighted_integral_example():
    f = StepFunction.constant(1)
    w = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)],
        [QS2(1), QS2(Fraction(1, 4))])
    # oracle: direct piecewise sum 1*(1/2) + (1/4)*(1/2) = 5/8
    assert f.integrate_over(weight=w) == QS2(Fraction(5, 8))


def test_step_refine():
    f = StepFunction.constant(1)
    r = f.refine_to_level(1)
    assert len(r.pieces) == 2 and all(v == QS2(1) for _, v in r.pieces)
    g = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(0)])
    r2 = g.refine_to_level(2)
    assert [v for _, v in r2.pieces] == [QS2(3), QS2(3), QS2(0), QS2(0)]
    assert r2.integral() == g.integral()


def test_refine_budget():
    f = StepFunction.constant(1)
    with pytest.raises(GridBudgetError):
        f.refine_to_level(30)


def test_step_algebra_and_eval():
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 4), Fraction(1)], [QS2(1), QS2(2)])
    g = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(5), QS2(-5)])
    h = f + g
    assert h.value_at(Fraction(0)) == QS2(6)
    assert h.value_at(Fraction(3, 8)) == QS2(7)
    assert h.value_at(Fraction(3, 4)) == QS2(-3)
    assert (f - f).integrate_over() == QS2(0)
    assert (f * g).value_at(Fraction(1, 8)) == QS2(5)


def test_step_canonical_merge():
    f = StepFunction([(iv(0, 1), QS2(7)), (iv(1, 1), QS2(7))])
    assert len(f.pieces) == 1


def test_step_partition_validation():
    with pytest.raises(ValueError):
        StepFunction([(iv(0, 1), QS2(1))])  # missing right half


def test_step_json_roundtrip():
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)],
        [QS2(3), QS2(Fraction(-1, 2), Fraction(1, 4))])
    assert step_from_json(step_to_json(f)) == f
