"""Flat-spectrum Walsh polynomials on a dyadic interval.

The atom H is built as a product of three factors living on disjoint dyadic
digit ranges of x:

    H(x) = chi_Delta(x) * h(digits K+1..M of x) * R_{M+1}(x)

where h is the inner-product pattern h(c) = (-1)^(c_1 c_2 + c_3 c_4 + ...)
on t = M - K digits (t even).  Its Walsh-Hadamard transform has constant
magnitude 2^(t/2) at every index, so the product's spectrum is exactly the
block [2^M, 2^(M+1)) with every coefficient magnitude 2^(-(M+K)/2).
Pointwise H is -1 on one half of each level-M cell of Delta and +1 on the
other, so the -1 set and the +1 set each have measure |Delta|/2.

M = K is admitted (h is the empty product): the induction that consumes
these atoms chooses cut levels K_i > K_1 and applies them to intervals of
level K_1 + 1, which makes the degenerate case legitimate and the parity
convention (M - K even) consistent.

The -1/+1 sets are 2^t half-cells; they are materialized as DyadicSets only
under a piece budget, but measure queries against any dyadic interval are
always exact and O(t).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .exactnum import QS2, Mag
from .geometry import DyadicInterval, DyadicSet, GridBudgetError
from .walsh import walsh_eval

DEFAULT_ATOM_PIECE_BUDGET = 1 << 18


def bent_pattern(t: int) -> List[int]:
    """+-1 array of length 2^t with perfectly flat Walsh-Hadamard spectrum.

    t must be even; pairs consecutive bits: sign = (-1)^(c1*c2 + c3*c4 + ...)
    reading c's bits most-significant first.
    """
    if t < 0 or t % 2:
        raise ValueError("flat patterns exist for even t only")
    out = []
    for c in range(1 << t):
        out.append(-1 if _pair_parity(c, t) else 1)
    return out


def _pair_parity(c: int, t: int) -> int:
    """Parity of sum of products of consecutive bit pairs of c (t bits)."""
    parity = 0
    for i in range(0, t, 2):
        b1 = (c >> (t - 1 - i)) & 1
        b2 = (c >> (t - 2 - i)) & 1
        parity ^= b1 & b2
    return parity


@dataclass(frozen=True)
class FlatPoly:
    """Lemma-1 atom on `delta` with top level M; all |a_k| = 2^(-(M+K)/2)."""

    delta: DyadicInterval
    M: int

    def __post_init__(self):
        t = self.M - self.delta.K
        if t < 0 or t % 2:
            raise ValueError("need M >= K with M - K even")

    @property
    def t(self) -> int:
        return self.M - self.delta.K

    @property
    def magnitude(self) -> Mag:
        """Coefficient magnitude 2^(-(M+K)/2) of the unit atom."""
        return Mag(1, -(self.M + self.delta.K))

    @property
    def index_lo(self) -> int:
        return 1 << self.M

    @property
    def index_hi(self) -> int:
        return 1 << (self.M + 1)

    # -- pointwise -----------------------------------------------------------

    def eval(self, x: Fraction) -> int:
        """Unit-atom value in {-1, 0, +1}."""
        if not self.delta.contains_point(x):
            return 0
        c = self._cell_index(x)
        h = -1 if _pair_parity(c, self.t) else 1
        r = -1 if _digit(x, self.M + 1) else 1
        return h * r

    def _cell_index(self, x: Fraction) -> int:
        """Index of the level-M cell of delta containing x."""
        K, M = self.delta.K, self.M
        pos = (x.numerator << M) // x.denominator  # floor(x 2^M)
        return pos - (self.delta.l << (M - K))

    # -- the -1 / +1 sets ------------------------------------------------------

    def minus_cell_side(self, c: int) -> int:
        """Which half (0 left, 1 right) of cell c carries the value -1."""
        # H = h * R; R is +1 left, -1 right; H = -1 where R = -h(c).
        return 1 if not _pair_parity(c, self.t) else 0

    def minus_set(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> DyadicSet:
        return self._half_set(want_minus=True, budget=budget)

    def plus_set(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> DyadicSet:
        return self._half_set(want_minus=False, budget=budget)

    def _half_set(self, want_minus: bool, budget: int) -> DyadicSet:
        if 1 << self.t > budget:
            raise GridBudgetError(f"atom has 2^{self.t} cells, over budget")
        K, M = self.delta.K, self.M
        base = self.delta.l << (M + 1 - K)
        ivs = []
        for c in range(1 << self.t):
            side = self.minus_cell_side(c)
            if not want_minus:
                side = 1 - side
            ivs.append(DyadicInterval(M + 1, base + 2 * c + side))
        return DyadicSet(ivs)

    def minus_measure_within(self, iv: DyadicInterval) -> Fraction:
        """|{unit atom = -1} intersect iv| exactly, without materializing."""
        return self._half_measure_within(iv, want_minus=True)

    def plus_measure_within(self, iv: DyadicInterval) -> Fraction:
        return self._half_measure_within(iv, want_minus=False)

    def _half_measure_within(self, iv: DyadicInterval, want_minus: bool) -> Fraction:
        K, M = self.delta.K, self.M
        if not iv.intersects(self.delta):
            return Fraction(0)
        if iv.contains(self.delta):
            return self.delta.measure / 2
        # iv strictly inside delta
        if iv.K <= M:
            # union of whole cells: exactly half of iv
            return iv.measure / 2
        # iv inside a single cell (level > M): locate the cell and its half
        cell_pos = iv.l >> (iv.K - M)
        c = cell_pos - (self.delta.l << (M - K))
        side = self.minus_cell_side(c)
        if not want_minus:
            side = 1 - side
        half = DyadicInterval(M + 1, (cell_pos << 1) + side)
        if half.contains(iv):
            return iv.measure
        if iv.contains(half):
            return half.measure
        return Fraction(0)

    # -- spectrum ----------------------------------------------------------------

    def coefficient_sign(self, k: int) -> int:
        """Sign of the unit atom's Walsh coefficient a_k, k in the block.

        Tensor form: sign = W_{k_low}(left(delta)) * (-1)^(Q(k_mid)) where
        k_low is the low K bits, k_mid the next t bits, and Q the same
        pair-product form (the pattern is self-dual).
        """
        if not (self.index_lo <= k < self.index_hi):
            raise ValueError("index outside the atom's block")
        K = self.delta.K
        k_low = k & ((1 << K) - 1)
        k_mid = (k >> K) & ((1 << self.t) - 1)
        s = walsh_eval(k_low, self.delta.left) if K else 1
        if _pair_parity(k_mid, self.t):
            s = -s
        return s

    def coefficients(self) -> List[QS2]:
        """All 2^M block coefficients of the unit atom (small atoms only)."""
        mag = self.magnitude.to_qs2()
        return [mag * self.coefficient_sign(k)
                for k in range(self.index_lo, self.index_hi)]


def _digit(x: Fraction, n: int) -> int:
    num = x.numerator << n
    return (num // x.denominator) & 1


def build_flat_poly(delta: DyadicInterval, M: int) -> FlatPoly:
    """Construct the Lemma-1 atom for `delta` and top level M."""
    return FlatPoly(delta, M)
