"""Exact arithmetic in Q[sqrt(2)] plus dyadic rationals.

Every quantity in the constructions (coefficient magnitudes 2^(-e/2),
interval measures, L1/L2 norms) lives in the field Q[sqrt(2)].  Values are
kept as a pair of Fractions (a, b) meaning a + b*sqrt(2); sign decisions are
made purely with integer arithmetic, never floating point.

Two representations are provided:

* ``QS2`` -- general field elements, used wherever values are added.
* ``Mag`` -- a positive r * 2^(e/2) with rational r and integer e, used for
  coefficient magnitudes whose half-exponent e can be astronomically large.
  Multiplication and comparison stay cheap at any depth; conversion to QS2
  is only done when the exponent is small enough to expand.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import total_ordering
from math import isqrt
from typing import Union

Rational = Fraction

_NumberLike = Union[int, Fraction, "QS2"]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"not a rational: {x!r}")


@total_ordering
class QS2:
    """Element a + b*sqrt(2) of Q[sqrt(2)] with exact total order."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))

    def __setattr__(self, *args):
        raise AttributeError("QS2 is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_rational(cls, r) -> "QS2":
        return cls(_as_fraction(r), 0)

    @classmethod
    def sqrt2(cls) -> "QS2":
        return cls(0, 1)

    # -- ring/field operations --------------------------------------------

    def _coerce(self, other):
        if isinstance(other, QS2):
            return other
        if isinstance(other, (int, Fraction)):
            return QS2(other, 0)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QS2(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QS2(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QS2(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = o.a * o.a - 2 * o.b * o.b
        if d == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt2]")
        # 1/(a+b*sqrt2) = (a-b*sqrt2)/(a^2-2b^2)
        return self * QS2(o.a / d, -o.b / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return QS2(-self.a, -self.b)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = QS2(1, 0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- order -------------------------------------------------------------

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(2), by comparing a^2 against 2 b^2."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: |a| vs |b|*sqrt2  <=>  a^2 vs 2 b^2
        lhs = a * a
        rhs = 2 * b * b
        if a > 0:  # b < 0
            return 1 if lhs > rhs else (-1 if lhs < rhs else 0)
        return -1 if lhs > rhs else (1 if lhs < rhs else 0)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __hash__(self):
        return hash((self.a, self.b))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def is_rational(self) -> bool:
        return self.b == 0

    # -- rendering ----------------------------------------------------------

    def __repr__(self):
        return f"QS2({self.a!r}, {self.b!r})"

    def __str__(self):
        return qs2_str(self)

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * 2 ** 0.5

    def decimal(self, digits: int = 12) -> str:
        """Decimal rendering with `digits` digits after the point, truncated
        toward zero, computed by integer arithmetic only."""
        neg = self.sign() < 0
        v = -self if neg else self
        scale = 10 ** digits
        # floor(scale * (a + b sqrt2)) with a,b = p/q, r/s
        p, q = v.a.numerator, v.a.denominator
        r, s = v.b.numerator, v.b.denominator
        # value*scale = (p*s*scale + r*q*scale*sqrt2) / (q*s)
        A = p * s * scale
        B = r * q * scale
        D = q * s
        n = _floor_div_sqrt2(A, B, D)
        whole, frac = divmod(n, scale)
        out = f"{whole}.{frac:0{digits}d}" if digits else f"{whole}"
        return "-" + out if neg else out


def _floor_div_sqrt2(A: int, B: int, D: int) -> int:
    """floor((A + B*sqrt(2)) / D) for integers A, B and D > 0."""
    if B == 0:
        return A // D
    # isqrt gives floor(sqrt(2 B^2)) for B >= 0; adjust for negative B.
    if B > 0:
        t = isqrt(2 * B * B)  # floor(B*sqrt2)
        lo = (A + t) // D
    else:
        t = isqrt(2 * B * B)  # floor(|B| sqrt2)
        lo = (A - t - 1) // D
    # lo is within 1 of the answer; fix up by exact comparison.
    while _cmp_int_vs(A, B, D * (lo + 1)) >= 0:
        lo += 1
    while _cmp_int_vs(A, B, D * lo) < 0:
        lo -= 1
    return lo


def _cmp_int_vs(A: int, B: int, C: int) -> int:
    """Sign of (A + B*sqrt2) - C using integers only."""
    return QS2(Fraction(A - C), Fraction(B)).sign()


QS2_ZERO = QS2(0, 0)
QS2_ONE = QS2(1, 0)


def half_power(e: int) -> QS2:
    """2^(-e/2) exactly.  Even e gives a rational; odd e carries a sqrt2."""
    if e % 2 == 0:
        k = -e // 2
        return QS2(_pow2_fraction(k), 0)
    # 2^(-e/2) = 2^(-(e+1)/2) * sqrt2
    k = -(e + 1) // 2
    return QS2(0, _pow2_fraction(k))


def _pow2_fraction(k: int) -> Fraction:
    return Fraction(2 ** k) if k >= 0 else Fraction(1, 2 ** (-k))


# -- serialization ----------------------------------------------------------

def qs2_str(v: QS2) -> str:
    """Canonical string "p/q+r/s*sqrt2" with zero terms omitted."""
    if v.a == 0 and v.b == 0:
        return "0"
    parts = []
    if v.a != 0:
        parts.append(_frac_str(v.a))
    if v.b != 0:
        bs = _frac_str(v.b)
        if bs == "1":
            term = "sqrt2"
        elif bs == "-1":
            term = "-sqrt2"
        else:
            term = bs + "*sqrt2"
        if parts and not term.startswith("-"):
            parts.append("+" + term)
        else:
            parts.append(term)
    return "".join(parts)


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


_TERM_RE = re.compile(r"^([+-]?(?:\d+(?:/\d+)?)?)(\*?sqrt2)?$")


def qs2_parse(s: str) -> QS2:
    """Parse the canonical "p/q+r/s*sqrt2" form (either term may be absent)."""
    s = s.strip().replace(" ", "")
    if not s:
        raise ValueError("empty QS2 string")
    # split into signed terms
    terms = re.findall(r"[+-]?[^+-]+", s)
    a = Fraction(0)
    b = Fraction(0)
    for t in terms:
        m = _TERM_RE.match(t)
        if not m:
            raise ValueError(f"bad QS2 term {t!r} in {s!r}")
        coef, root = m.groups()
        if coef in (None, "", "+", "-"):
            c = Fraction(1 if coef != "-" else -1)
        else:
            c = Fraction(coef)
        if root:
            b += c
        else:
            a += c
    return QS2(a, b)


# -- magnitudes r * 2^(e/2) ---------------------------------------------------

@total_ordering
class Mag:
    """Positive magnitude r * 2^(e/2) with rational r > 0 and integer e.

    The half-exponent e may be huge (schedules reach levels in the
    thousands); products and comparisons never expand 2^(e/2).
    """

    __slots__ = ("r", "e")

    def __init__(self, r, e: int = 0):
        r = _as_fraction(r)
        if r <= 0:
            raise ValueError("Mag must be positive")
        # normalize powers of two out of r into e
        num, den = r.numerator, r.denominator
        while num % 2 == 0:
            num //= 2
            e += 2
        while den % 2 == 0:
            den //= 2
            e -= 2
        object.__setattr__(self, "r", Fraction(num, den))
        object.__setattr__(self, "e", e)

    def __setattr__(self, *args):
        raise AttributeError("Mag is immutable")

    @classmethod
    def from_qs2_abs(cls, v: QS2) -> "Mag":
        """|v| for v of the pure form a or b*sqrt2 (one term only)."""
        if v.a != 0 and v.b != 0:
            raise ValueError("mixed QS2 cannot become a Mag exactly")
        if v.a != 0:
            return cls(abs(v.a), 0)
        if v.b != 0:
            return cls(abs(v.b), 1)
        raise ValueError("zero has no Mag")

    def __mul__(self, other):
        if isinstance(other, Mag):
            return Mag(self.r * other.r, self.e + other.e)
        if isinstance(other, (int, Fraction)):
            f = _as_fraction(other)
            if f <= 0:
                raise ValueError("Mag scaling must be positive")
            return Mag(self.r * f, self.e)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Mag):
            return Mag(self.r / other.r, self.e - other.e)
        if isinstance(other, (int, Fraction)):
            f = _as_fraction(other)
            if f <= 0:
                raise ValueError("Mag scaling must be positive")
            return Mag(self.r / f, self.e)
        return NotImplemented

    def shift(self, de: int) -> "Mag":
        """Multiply by 2^(de/2)."""
        return Mag(self.r, self.e + de)

    def _cmp(self, other: "Mag") -> int:
        # r1 2^(e1/2) vs r2 2^(e2/2): square both sides (all positive)
        de = self.e - other.e
        lhs = self.r * self.r
        rhs = other.r * other.r
        if de >= 0:
            lhs = lhs * (2 ** de)
        else:
            rhs = rhs * (2 ** (-de))
        return (lhs > rhs) - (lhs < rhs)

    def _coerce_mag(self, other):
        if isinstance(other, Mag):
            return other
        if isinstance(other, (int, Fraction)):
            f = _as_fraction(other)
            if f <= 0:
                return None
            return Mag(f, 0)
        return None

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and _as_fraction(other) <= 0:
            return False
        o = self._coerce_mag(other)
        if o is None:
            if isinstance(other, QS2):
                return self.cmp_qs2(other) == 0
            return NotImplemented
        return self._cmp(o) == 0

    def __lt__(self, other):
        o = self._coerce_mag(other)
        if o is None:
            if isinstance(other, (int, Fraction)):
                return False  # other <= 0 < self
            if isinstance(other, QS2):
                return self.cmp_qs2(other) < 0
            return NotImplemented
        return self._cmp(o) < 0

    def __hash__(self):
        return hash((self.r, self.e))

    def cmp_qs2(self, v: QS2) -> int:
        """Exact comparison against a general QS2 value."""
        if v.sign() <= 0:
            return 1
        if self.expandable():
            return (self.to_qs2() - v).sign()
        # exponent enormous: decide by crude two-sided bounds
        lo, hi = self.bounds_pow2()
        if hi < v:
            return -1
        if lo > v:
            return 1
        raise ArithmeticError("Mag/QS2 comparison too close to resolve cheaply")

    def bounds_pow2(self):
        """Dyadic lower/upper bounds as QS2 rationals (coarse, factor <= 2)."""
        # r in (2^i, 2^(i+1)]
        i = self.r.numerator.bit_length() - self.r.denominator.bit_length()
        lo_e = self.e + 2 * (i - 1)
        hi_e = self.e + 2 * (i + 1)
        return half_power(-lo_e), half_power(-hi_e)

    def expandable(self, limit_bits: int = 100000) -> bool:
        return abs(self.e) <= 2 * limit_bits

    def to_qs2(self) -> QS2:
        if not self.expandable():
            raise OverflowError("Mag exponent too large to expand")
        return QS2(self.r, 0) * half_power(-self.e)

    def to_qs2_upper(self, cap_bits: int = 512) -> QS2:
        """Exact value when expandable, else a representable upper bound
        (only valid for values at most 2^-cap_bits, i.e. huge negative e)."""
        if abs(self.e) <= 4 * cap_bits:
            return self.to_qs2()
        if self.e > 0:
            raise OverflowError("Mag too large for an upper substitute")
        return half_power(2 * cap_bits)

    def __repr__(self):
        return f"Mag({self.r}, e={self.e})"

    def __str__(self):
        if self.expandable(2000):
            return qs2_str(self.to_qs2())
        return f"{self.r}*2^({self.e}/2)"

    def to_float(self) -> float:
        try:
            return float(self.r) * 2.0 ** (self.e / 2)
        except OverflowError:
            return float("inf") if self.e > 0 else 0.0


def mag_sum_upper(mags) -> "Mag | None":
    """Cheap certified upper bound of a sum of Mags: n * max."""
    mags = list(mags)
    if not mags:
        return None
    top = max(mags)
    return top * len(mags)


def mag_sum_exact_qs2(mags) -> QS2:
    """Exact sum, expanding each term (requires modest exponents)."""
    out = QS2_ZERO
    for m in mags:
        out = out + m.to_qs2()
    return out


# -- dyadic rationals ---------------------------------------------------------

@total_ordering
class DyadicRational:
    """k / 2^J in canonical form (k odd, or J = 0)."""

    __slots__ = ("k", "J")

    def __init__(self, k: int, J: int = 0):
        if J < 0:
            raise ValueError("level must be nonnegative")
        while J > 0 and k % 2 == 0:
            k //= 2
            J -= 1
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "J", J)

    def __setattr__(self, *args):
        raise AttributeError("DyadicRational is immutable")

    @classmethod
    def from_fraction(cls, f: Fraction) -> "DyadicRational":
        den = f.denominator
        J = den.bit_length() - 1
        if den != 1 << J:
            raise ValueError(f"{f} is not dyadic")
        return cls(f.numerator, J)

    def as_fraction(self) -> Fraction:
        return Fraction(self.k, 1 << self.J)

    def digit(self, n: int) -> int:
        """n-th binary digit after the point (n >= 1) of the value in [0,1)."""
        f = self.as_fraction()
        if not (0 <= f < 1):
            raise ValueError("digit() expects a point of [0,1)")
        # digit n = floor(x * 2^n) mod 2
        num = f.numerator << n
        return (num // f.denominator) & 1

    def __eq__(self, other):
        if not isinstance(other, DyadicRational):
            return NotImplemented
        return self.k == other.k and self.J == other.J

    def __lt__(self, other):
        if not isinstance(other, DyadicRational):
            return NotImplemented
        return self.as_fraction() < other.as_fraction()

    def __hash__(self):
        return hash((self.k, self.J))

    def __repr__(self):
        return f"DyadicRational({self.k}, {self.J})"

    def __str__(self):
        return f"{self.k}/2^{self.J}"


def dyadic_parse(s: str) -> DyadicRational:
    m = re.match(r"^\s*(-?\d+)\s*(?:/\s*2\^(\d+))?\s*$", s)
    if not m:
        raise ValueError(f"bad dyadic rational {s!r}")
    k = int(m.group(1))
    J = int(m.group(2) or 0)
    return DyadicRational(k, J)
