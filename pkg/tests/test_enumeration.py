from fractions import Fraction

from walshuniv.enumeration import (StepEnumeration, enumerate_steps,
                                   find_index, tuple_to_step, values_of_size)
from walshuniv.exactnum import QS2
from walshuniv.geometry import StepFunction


def test_first_is_constant_one():
    f = enumerate_steps(1)
    assert f == StepFunction.constant(1)


def test_canonical_prefix():
    e = StepEnumeration()
    assert e.canonical(1) == (Fraction(1),)
    assert e.canonical(2) == (Fraction(-1),)
    # height 3, level 0: 1/2, 2, -1/2, -2
    assert e.canonical(3) == (Fraction(1, 2),)
    assert e.canonical(4) == (Fraction(2),)
    assert e.canonical(5) == (Fraction(-1, 2),)
    assert e.canonical(6) == (Fraction(-2),)
    # height 3, level 1: pairs over {1,-1}, non-constant
    assert e.canonical(7) == (Fraction(1), Fraction(-1))
    assert e.canonical(8) == (Fraction(-1), Fraction(1))


def test_values_of_size():
    assert values_of_size(2) == [Fraction(1), Fraction(-1)]
    assert values_of_size(3) == [Fraction(1, 2), Fraction(2),
                                 Fraction(-1, 2), Fraction(-2)]
    assert values_of_size(4) == [Fraction(1, 3), Fraction(3),
                                 Fraction(-1, 3), Fraction(-3)]
    # size 5: 1/4, 2/3, 3/2, 4 and negatives; 2/4, 3/3 are not reduced
    assert values_of_size(5) == [Fraction(1, 4), Fraction(2, 3),
                                 Fraction(3, 2), Fraction(4),
                                 Fraction(-1, 4), Fraction(-2, 3),
                                 Fraction(-3, 2), Fraction(-4)]


def test_no_zero_values_and_partition():
    e = StepEnumeration()
    for m in range(1, 200):
        f = e.function_at(m)
        assert all(v != QS2(0) for _, v in f.pieces)
        assert sum((iv.measure for iv, _ in f.pieces), Fraction(0)) == 1


def test_interleave_recurrence():
    e = StepEnumeration()
    for i in (1, 2, 5, 9):
        base = 2 * i - 1
        tup = e.canonical(i)
        for m in (base, 2 * base, 4 * base):
            assert e.tuple_at(m) == tup


def test_each_canonical_once_per_height_class():
    e = StepEnumeration()
    seen = set()
    for i in range(1, 400):
        t = e.canonical(i)
        assert t not in seen
        seen.add(t)
    # heights never decrease along the canonical order
    hs = [e.height(e.canonical(i)) for i in range(1, 400)]
    assert all(a <= b for a, b in zip(hs, hs[1:]))


def test_minimal_level_only():
    e = StepEnumeration()
    for i in range(1, 400):
        t = e.canonical(i)
        if len(t) > 1:
            assert any(t[j] != t[j + 1] for j in range(0, len(t), 2))


def test_density_by_search():
    # the target appears exactly (distance 0) within a modest budget
    e = StepEnumeration()
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(-1)])
    m = find_index(e, f, budget=400)
    assert m is not None
    assert e.function_at(m) == f


def test_three_minus_one_position():
    # the end-to-end target 3 chi_[0,1/2) - chi_[1/2,1): record its position
    e = StepEnumeration()
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(-1)])
    m = find_index(e, f, budget=400)
    # (3,-1) has height 5; all height <= 4 functions precede it
    assert e.height((Fraction(3), Fraction(-1))) == 5
    assert m > 50
