"""Walk through the Walsh-Paley toolbox: Rademacher products, the block
kernels, exact vs float transforms, and the Cauchy-Schwarz prefix majorant.

Run:  python3 demos/demo_walsh_identities.py
"""

from fractions import Fraction

import numpy as np

from walshuniv import (QS2, Mag, block_kernel, fwht_analysis,
                       fwht_analysis_float, fwht_synthesis,
                       fwht_synthesis_float, l1_prefix_majorant, rademacher,
                       walsh_eval)

print("Rademacher signs on eighths:",
      [rademacher(2, Fraction(i, 8)) for i in range(8)])
print("W_5 on eighths:           ",
      [walsh_eval(5, Fraction(i, 8)) for i in range(8)])

# The block kernel identities: summing a dyadic block of Walsh functions
# collapses to a two-valued spike near zero.
for m in (2, 3):
    k = block_kernel(m, "upper_half")
    print(f"sum of W_k over [2^{m}, 2^{m+1}) ->",
          [(str(iv), str(v)) for iv, v in k.pieces])
    print(f"  L1 norm = {k.integrate_over()}")

# Exact analysis/synthesis round trip on a ragged rational grid.
vals = [QS2(Fraction(3, 7)), QS2(Fraction(-1, 2)), QS2(2), QS2(0),
        QS2(Fraction(5, 3)), QS2(-1), QS2(Fraction(1, 8)), QS2(1)]
coeffs = fwht_analysis(vals)
print("coefficients:", [str(c) for c in coeffs])
assert fwht_synthesis(coeffs) == vals
print("exact round trip: identity")

# The float fast path exists for benchmarks only.
rng = np.random.default_rng(0)
v = rng.standard_normal(1 << 16)
err = np.max(np.abs(fwht_synthesis_float(fwht_analysis_float(v)) - v))
print(f"float round trip at J=16: max error {err:.2e}")

# The prefix majorant: any mid-block cut of a constant-magnitude block has
# L1 norm at most magnitude * 2^(level/2), an exact QS2 number.
maj = l1_prefix_majorant(Mag(Fraction(1, 4)), 3)
print("majorant for magnitude 1/4 at level 3:", maj.to_qs2())
