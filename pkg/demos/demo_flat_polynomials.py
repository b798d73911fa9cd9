"""Flat-spectrum atoms: a Walsh polynomial filling one index block with
constant coefficient magnitude, valued -1/+1 on half-measure subsets of a
dyadic interval and 0 outside it.

Run:  python3 demos/demo_flat_polynomials.py
"""

from fractions import Fraction

from walshuniv import QS2, bent_pattern, build_flat_poly, fwht_analysis
from walshuniv.geometry import DyadicInterval

print("inner-product pattern, t = 4:", bent_pattern(4))

delta = DyadicInterval(1, 0)          # [0, 1/2)
atom = build_flat_poly(delta, M=3)
n = 1 << 4
grid = [QS2(atom.eval(Fraction(i, n))) for i in range(n)]
print("values on sixteenths:", [str(v) for v in grid])

coeffs = fwht_analysis(grid)
print("spectrum:", [str(c) for c in coeffs])
print("block magnitudes are all 2^-(M+K)/2 =", str(atom.magnitude.to_qs2()))

print("-1 set:", atom.minus_set())
print("+1 set:", atom.plus_set())
print("each has measure", atom.minus_set().measure, "= |Delta|/2")

# Measure queries never materialize the sets: an atom with 2^40 cells still
# answers in O(t).
big = build_flat_poly(DyadicInterval(1, 1), M=41)
probe = DyadicInterval(3, 5)
print("huge atom, |{-1} within [5/8, 6/8)| =",
      big.minus_measure_within(probe))
