"""Dyadic intervals, finite unions, and piecewise-constant step functions.

All intervals are half-open [l/2^K, (l+1)/2^K); endpoints are a null set so
every integral in the constructions is unaffected by the convention, and it
makes partitions exact and point evaluation single-valued.

A DyadicSet is kept in canonical maximal form (sorted, disjoint, no two
pieces merge into a single dyadic interval), so set equality is syntactic.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .exactnum import QS2, QS2_ZERO, DyadicRational, qs2_parse, qs2_str

DEFAULT_GRID_BUDGET = 22  # J_max: never materialize more than 2^22 pieces


class GridBudgetError(Exception):
    """Raised when an operation would materialize beyond the dense-grid budget."""


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """[l/2^K, (l+1)/2^K) with 0 <= l < 2^K."""

    K: int
    l: int

    def __post_init__(self):
        if self.K < 0 or not (0 <= self.l < (1 << self.K)):
            raise ValueError(f"bad dyadic interval l={self.l}, K={self.K}")

    @property
    def left(self) -> Fraction:
        return Fraction(self.l, 1 << self.K)

    @property
    def right(self) -> Fraction:
        return Fraction(self.l + 1, 1 << self.K)

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 1 << self.K)

    def contains_point(self, x: Fraction) -> bool:
        return self.left <= x < self.right

    def contains(self, other: "DyadicInterval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.left < other.right and other.left < self.right

    def child(self, side: int) -> "DyadicInterval":
        """side 0 = left half, 1 = right half."""
        return DyadicInterval(self.K + 1, 2 * self.l + side)

    def split_to_level(self, K: int) -> List["DyadicInterval"]:
        if K < self.K:
            raise ValueError("cannot coarsen")
        n = 1 << (K - self.K)
        base = self.l << (K - self.K)
        return [DyadicInterval(K, base + i) for i in range(n)]

    def __str__(self):
        return f"[{self.left},{self.right})"


UNIT = DyadicInterval(0, 0)


def _intervals_from_run(a: Fraction, b: Fraction) -> List[DyadicInterval]:
    """Greedy maximal dyadic decomposition of [a, b) with dyadic endpoints."""
    out = []
    while a < b:
        # largest dyadic interval starting at a and contained in [a, b)
        da = DyadicRational.from_fraction(a)
        K = da.J  # coarsest level at which a is a grid point
        while True:
            step = Fraction(1, 1 << K)
            if a + step <= b:
                break
            K += 1
        out.append(DyadicInterval(K, int(a * (1 << K))))
        a += Fraction(1, 1 << K)
    return out


class DyadicSet:
    """Finite union of dyadic intervals in canonical maximal form."""

    __slots__ = ("intervals", "_runs_cache", "_run_ends")

    def __init__(self, intervals: Iterable[DyadicInterval] = (), _canonical=False):
        ivs = list(intervals)
        if _canonical:
            object.__setattr__(self, "intervals", tuple(ivs))
            return
        # merge into disjoint runs, then re-split greedily
        runs: List[Tuple[Fraction, Fraction]] = []
        for iv in sorted(ivs, key=lambda i: (i.left, i.right)):
            a, b = iv.left, iv.right
            if runs and a <= runs[-1][1]:
                pa, pb = runs[-1]
                runs[-1] = (pa, max(pb, b))
            else:
                runs.append((a, b))
        out: List[DyadicInterval] = []
        for a, b in runs:
            out.extend(_intervals_from_run(a, b))
        object.__setattr__(self, "intervals", tuple(out))

    def __setattr__(self, *args):
        raise AttributeError("DyadicSet is immutable")

    @classmethod
    def empty(cls) -> "DyadicSet":
        return cls(())

    @classmethod
    def unit(cls) -> "DyadicSet":
        return cls((UNIT,), _canonical=True)

    @property
    def measure(self) -> Fraction:
        return sum((iv.measure for iv in self.intervals), Fraction(0))

    def is_empty(self) -> bool:
        return not self.intervals

    def contains_point(self, x: Fraction) -> bool:
        for iv in self.intervals:
            if iv.contains_point(x):
                return True
            if iv.left > x:
                return False
        return False

    def _runs(self) -> List[Tuple[Fraction, Fraction]]:
        runs = []
        for iv in self.intervals:
            if runs and runs[-1][1] == iv.left:
                runs[-1] = (runs[-1][0], iv.right)
            else:
                runs.append((iv.left, iv.right))
        return runs

    def union(self, other: "DyadicSet") -> "DyadicSet":
        return DyadicSet(self.intervals + other.intervals)

    def intersect(self, other: "DyadicSet") -> "DyadicSet":
        out = []
        a_runs, b_runs = self._runs(), other._runs()
        i = j = 0
        while i < len(a_runs) and j < len(b_runs):
            lo = max(a_runs[i][0], b_runs[j][0])
            hi = min(a_runs[i][1], b_runs[j][1])
            if lo < hi:
                out.extend(_intervals_from_run(lo, hi))
            if a_runs[i][1] <= b_runs[j][1]:
                i += 1
            else:
                j += 1
        return DyadicSet(out)

    def complement_in_unit(self) -> "DyadicSet":
        out = []
        cursor = Fraction(0)
        for a, b in self._runs():
            if cursor < a:
                out.extend(_intervals_from_run(cursor, a))
            cursor = b
        if cursor < 1:
            out.extend(_intervals_from_run(cursor, Fraction(1)))
        return DyadicSet(out)

    def minus(self, other: "DyadicSet") -> "DyadicSet":
        return self.intersect(other.complement_in_unit())

    def measure_within(self, iv: DyadicInterval) -> Fraction:
        """|self  intersect  iv| without building the intersection."""
        lo, hi = iv.left, iv.right
        runs = getattr(self, "_runs_cache", None)
        if runs is None:
            runs = self._runs()
            object.__setattr__(self, "_runs_cache", runs)
            object.__setattr__(self, "_run_ends", [b for _, b in runs])
        i = bisect.bisect_right(self._run_ends, lo)
        total = Fraction(0)
        while i < len(runs):
            a, b = runs[i]
            if a >= hi:
                break
            x, y = max(a, lo), min(b, hi)
            if x < y:
                total += y - x
            i += 1
        return total

    def __eq__(self, other):
        if not isinstance(other, DyadicSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        return f"DyadicSet({list(self.intervals)!r})"

    def __str__(self):
        return "{" + ", ".join(str(iv) for iv in self.intervals) + "}"


class StepFunction:
    """Piecewise-constant function on [0,1): ordered (interval, QS2) pieces.

    Pieces partition [0,1); adjacent equal-valued dyadic siblings are merged
    so the representation is canonical.
    """

    __slots__ = ("pieces",)

    def __init__(self, pieces: Sequence[Tuple[DyadicInterval, QS2]], _canonical=False):
        if _canonical:
            object.__setattr__(self, "pieces", tuple(pieces))
            return
        pieces = sorted(pieces, key=lambda p: p[0].left)
        cursor = Fraction(0)
        for iv, _ in pieces:
            if iv.left != cursor:
                raise ValueError(f"pieces do not partition [0,1): gap at {cursor}")
            cursor = iv.right
        if cursor != 1:
            raise ValueError("pieces do not cover [0,1)")
        object.__setattr__(self, "pieces", tuple(_merge_siblings(pieces)))

    def __setattr__(self, *args):
        raise AttributeError("StepFunction is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, v) -> "StepFunction":
        v = v if isinstance(v, QS2) else QS2(v)
        return cls(((UNIT, v),), _canonical=True)

    @classmethod
    def indicator(cls, s: DyadicSet, value=1) -> "StepFunction":
        value = value if isinstance(value, QS2) else QS2(value)
        pieces = []
        cursor = Fraction(0)
        for a, b in s._runs():
            if cursor < a:
                pieces.extend((iv, QS2_ZERO) for iv in _intervals_from_run(cursor, a))
            pieces.extend((iv, value) for iv in _intervals_from_run(a, b))
            cursor = b
        if cursor < 1:
            pieces.extend((iv, QS2_ZERO) for iv in _intervals_from_run(cursor, Fraction(1)))
        return cls(pieces)

    @classmethod
    def from_breaks(cls, breaks: Sequence[Fraction], values: Sequence[QS2]) -> "StepFunction":
        """values[i] on [breaks[i], breaks[i+1]); breaks must start 0, end 1."""
        assert breaks[0] == 0 and breaks[-1] == 1 and len(values) == len(breaks) - 1
        pieces = []
        for i, v in enumerate(values):
            for iv in _intervals_from_run(breaks[i], breaks[i + 1]):
                pieces.append((iv, v))
        return cls(pieces)

    # -- basic queries -------------------------------------------------------

    @property
    def max_level(self) -> int:
        return max(iv.K for iv, _ in self.pieces)

    def value_at(self, x) -> QS2:
        if isinstance(x, DyadicRational):
            x = x.as_fraction()
        if not (0 <= x < 1):
            raise ValueError("x outside [0,1)")
        lo, hi = 0, len(self.pieces) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.pieces[mid][0].left <= x:
                lo = mid
            else:
                hi = mid - 1
        return self.pieces[lo][1]

    def values_set(self):
        return {v for _, v in self.pieces}

    def support(self) -> DyadicSet:
        return DyadicSet([iv for iv, v in self.pieces if v != QS2_ZERO])

    # -- algebra ---------------------------------------------------------------

    def _zip(self, other: "StepFunction", op) -> "StepFunction":
        out = []
        i = j = 0
        cursor = Fraction(0)
        while i < len(self.pieces) and j < len(other.pieces):
            iv1, v1 = self.pieces[i]
            iv2, v2 = other.pieces[j]
            hi = min(iv1.right, iv2.right)
            for iv in _intervals_from_run(cursor, hi):
                out.append((iv, op(v1, v2)))
            cursor = hi
            if iv1.right == hi:
                i += 1
            if iv2.right == hi:
                j += 1
        return StepFunction(out)

    def __add__(self, other):
        if isinstance(other, StepFunction):
            return self._zip(other, lambda a, b: a + b)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            return self._zip(other, lambda a, b: a - b)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            return self._zip(other, lambda a, b: a * b)
        if isinstance(other, (int, Fraction, QS2)):
            c = other if isinstance(other, QS2) else QS2(other)
            return StepFunction(tuple((iv, v * c) for iv, v in self.pieces))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(tuple((iv, -v) for iv, v in self.pieces), _canonical=True)

    def abs(self) -> "StepFunction":
        return StepFunction(tuple((iv, abs(v)) for iv, v in self.pieces))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    # -- integration -------------------------------------------------------------

    def integral(self) -> QS2:
        out = QS2_ZERO
        for iv, v in self.pieces:
            out = out + v * iv.measure
        return out

    def integrate_over(self, s: Optional[DyadicSet] = None,
                       weight: Optional["StepFunction"] = None,
                       absolute: bool = True) -> QS2:
        """Integral of |f| (or f) over s, against an optional weight."""
        f = self.abs() if absolute else self
        if weight is not None:
            f = f * weight
        if s is None:
            return f.integral()
        out = QS2_ZERO
        for iv, v in f.pieces:
            if v != QS2_ZERO:
                m = s.measure_within(iv)
                if m:
                    out = out + v * m
        return out

    def refine_to_level(self, K: int, budget: int = DEFAULT_GRID_BUDGET) -> "StepFunction":
        """Same function with every piece at exactly level K (2^K pieces)."""
        if K < self.max_level:
            raise ValueError("target level below current refinement")
        if K > budget:
            raise GridBudgetError(f"2^{K} pieces exceeds the grid budget 2^{budget}")
        out = []
        for iv, v in self.pieces:
            out.extend((sub, v) for sub in iv.split_to_level(K))
        return StepFunction(tuple(out), _canonical=True)

    def grid_values(self, J: int, budget: int = DEFAULT_GRID_BUDGET) -> List[QS2]:
        """Values on the uniform level-J grid."""
        if J < self.max_level:
            raise ValueError("grid coarser than the function")
        if J > budget:
            raise GridBudgetError(f"2^{J} values exceeds the grid budget 2^{budget}")
        out = []
        for iv, v in self.pieces:
            out.extend([v] * (1 << (J - iv.K)))
        return out

    def __repr__(self):
        return f"StepFunction({len(self.pieces)} pieces, level {self.max_level})"


def _merge_siblings(pieces):
    stack: List[Tuple[DyadicInterval, QS2]] = []
    for p in pieces:
        stack.append(p)
        while len(stack) >= 2:
            (i1, v1), (i2, v2) = stack[-2], stack[-1]
            if (v1 == v2 and i1.K == i2.K and i2.l == i1.l + 1 and i1.l % 2 == 0):
                stack[-2:] = [(DyadicInterval(i1.K - 1, i1.l // 2), v1)]
            else:
                break
    return stack


def step_from_grid(values: Sequence[QS2]) -> StepFunction:
    n = len(values)
    J = n.bit_length() - 1
    if 1 << J != n:
        raise ValueError("grid length must be a power of two")
    return StepFunction([(DyadicInterval(J, i), v) for i, v in enumerate(values)])


# -- external interface: step-function JSON files ------------------------------

def step_to_json(f: StepFunction) -> list:
    return [{"l": iv.l, "K": iv.K, "value": qs2_str(v)} for iv, v in f.pieces]


def step_from_json(data) -> StepFunction:
    if isinstance(data, str):
        data = json.loads(data)
    pieces = [(DyadicInterval(int(d["K"]), int(d["l"])), qs2_parse(d["value"]))
              for d in data]
    return StepFunction(pieces)
