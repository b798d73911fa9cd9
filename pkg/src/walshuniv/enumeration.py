"""Deterministic enumeration of dyadic step functions with nonzero rational
values.

Canonical order: a function's height is (minimal dyadic level) + (largest
|numerator| + denominator among its values).  Heights ascend; within one
height, levels ascend; within one (height, level) class, value tuples are
ordered lexicographically by the value key (size, sign, |value|), positives
first -- which puts the constant 1 first overall.  Tuples representable at a
coarser level are skipped (each function appears once in canonical order at
its minimal level).

The published sequence f_1, f_2, ... interleaves the canonical one so every
function recurs at indices 2^j (2i - 1) for all j: the construction that
consumes the sequence needs each function available beyond any index.

The level budget caps the classes (the tuple count per class grows doubly
exponentially in the level); functions deeper than the budget appear only
as budgets grow.  The ordering is part of the external contract: reports
and selections are reproducible from (level_budget,) alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple

from .exactnum import QS2
from .geometry import DyadicInterval, StepFunction

DEFAULT_LEVEL_BUDGET = 2


def value_key(v: Fraction):
    return (abs(v.numerator) + v.denominator, v < 0, abs(v))


def values_of_size(s: int) -> List[Fraction]:
    """Reduced nonzero rationals with |p| + q = s, in key order."""
    out = []
    for den in range(1, s):
        num = s - den
        f = Fraction(num, den)
        if f.numerator == num and f.denominator == den:  # reduced
            out.append(f)
    out.sort()
    return [f for f in out] + [-f for f in out]


def values_up_to(s: int) -> List[Fraction]:
    out = []
    for k in range(2, s + 1):
        out.extend(values_of_size(k))
    out.sort(key=value_key)
    return out


def _mergeable(tup: Tuple[Fraction, ...]) -> bool:
    return all(tup[j] == tup[j + 1] for j in range(0, len(tup), 2))


class StepEnumeration:
    """Lazily generated canonical list plus the interleaved index map."""

    def __init__(self, level_budget: int = DEFAULT_LEVEL_BUDGET):
        self.level_budget = level_budget
        self._canon: List[Tuple[Fraction, ...]] = []
        self._gen = self._generate()

    def _generate(self) -> Iterator[Tuple[Fraction, ...]]:
        h = 2
        while True:
            for L in range(0, min(h - 2, self.level_budget) + 1):
                smax = h - L
                if smax < 2:
                    continue
                vals = values_up_to(smax)
                tops = {v for v in vals if value_key(v)[0] == smax}
                if not tops:
                    continue
                n = 1 << L
                for tup in itertools.product(vals, repeat=n):
                    if not any(v in tops for v in tup):
                        continue
                    if L >= 1 and _mergeable(tup):
                        continue
                    yield tup
            h += 1

    def canonical(self, i: int) -> Tuple[Fraction, ...]:
        """i-th canonical tuple (1-based)."""
        if i < 1:
            raise ValueError("canonical index starts at 1")
        while len(self._canon) < i:
            self._canon.append(next(self._gen))
        return self._canon[i - 1]

    def tuple_at(self, m: int) -> Tuple[Fraction, ...]:
        if m < 1:
            raise ValueError("enumeration index starts at 1")
        odd = m
        while odd % 2 == 0:
            odd //= 2
        return self.canonical((odd + 1) // 2)

    def function_at(self, m: int) -> StepFunction:
        return tuple_to_step(self.tuple_at(m))

    def first_index_of_canonical(self, i: int) -> int:
        return 2 * i - 1

    def occurrences(self, i: int, above: int) -> int:
        """Smallest index > `above` at which canonical i appears."""
        base = 2 * i - 1
        m = base
        while m <= above:
            m *= 2
        return m

    def height(self, tup: Tuple[Fraction, ...]) -> int:
        L = (len(tup)).bit_length() - 1
        return L + max(value_key(v)[0] for v in tup)


def tuple_to_step(tup: Tuple[Fraction, ...]) -> StepFunction:
    n = len(tup)
    L = n.bit_length() - 1
    if 1 << L != n:
        raise ValueError("tuple length must be a power of two")
    return StepFunction([(DyadicInterval(L, i), QS2(v))
                         for i, v in enumerate(tup)])


def enumerate_steps(m: int, level_budget: int = DEFAULT_LEVEL_BUDGET) -> StepFunction:
    """The m-th function of the published sequence."""
    return StepEnumeration(level_budget).function_at(m)


def find_index(enum: StepEnumeration, f: StepFunction, budget: int,
               above: int = 0) -> Optional[int]:
    """Smallest index > `above` (and <= budget) whose function equals f."""
    for m in range(above + 1, budget + 1):
        if enum.function_at(m) == f:
            return m
    return None
