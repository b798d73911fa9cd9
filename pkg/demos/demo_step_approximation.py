"""Approximating a step function off a small exceptional set by chained
per-piece cascades, with strictly decreasing coefficients.

Run:  python3 demos/demo_step_approximation.py
"""

from fractions import Fraction

from walshuniv import QS2, build_step_approx, verify_step_approx
from walshuniv.geometry import StepFunction

f = StepFunction.from_breaks(
    [Fraction(0), Fraction(1, 2), Fraction(1)],
    [QS2(Fraction(1, 1024)), QS2(Fraction(-1, 1024))])

sa = build_step_approx(f, Fraction(1, 2), n0=1, mode="paper")
print("per-piece recursion depths:", [r.q for r in sa.runs])
print("exceptional complement measure:", sa.e_measure(), "> 1/2")
print("index range: [2^1, 2^%d)" % (sa.end_level + 1))
print("first coefficient:", sa.first_magnitude(),
      " last:", sa.last_magnitude())

rep = verify_step_approx(sa, seed=1, n_subsets=20)
print(rep.summary())

# The strictness device: the core magnitudes are non-increasing and the
# added 2^-(N0+k) makes every tie strict without ever being expanded.
print("\nperturbation shift N0 =", sa.N0,
      "; total perturbation mass <", sa.perturb_tail_qs2())
