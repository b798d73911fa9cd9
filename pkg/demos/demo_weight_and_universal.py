"""The truncated weight tower and the greedy sign selection, including the
honest desk-scale walls.

Run:  python3 demos/demo_weight_and_universal.py
"""

from fractions import Fraction

from walshuniv import (QS2, approximate, build_universal, build_weight,
                       convergence_report, verify_universal, verify_weight)
from walshuniv.geometry import StepFunction
from walshuniv.universal import SearchExhausted

w = build_weight(Fraction(1, 4), M_max=6, n0=4)
print("stage recursion depths:", [st.qs for st in w.stages])
print("mu_n values:", {n: str(w.mu_n(n)) for n in range(w.ntilde + 1, 7)})
print("measure{mu = 1} =", w.mu_one_measure(),
      " (the target > 3/4 needs depths the fragment tower refuses;")
print("  the shallow stages each keep an exceptional half uncrushed)")

g = build_universal(Fraction(1, 4), M_max=6, n0=4)
print("\n" + verify_universal(g).summary())

target = StepFunction.from_breaks(
    [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(-1)])

print("\nliteral six-stage tower, depth 3:")
try:
    approximate(g, target, Q=3)
except SearchExhausted as e:
    print(" ", e)

print("\ntwelve-stage tower, depth 3 (tolerant adoption, flagged):")
g12 = build_universal(Fraction(1, 4), M_max=12, n0=4)
sel = approximate(g12, target, Q=3)
csvtext, data = convergence_report(sel, g12)
for row in data["rows"]:
    print(f"  q={row['q']} nu={row['nu_q']} "
          f"error <= {row['error_decimal']} "
          f"(threshold met: {row['threshold_met']})")
print("errors strictly decreasing (enclosure verdict):",
      data["errors_strictly_decreasing"])
