"""Cascades: the quantitative one-round build, the exact reason deeper
rounds blow up, and the structural toy recursion that still exhibits the
full inductive shape.

Run:  python3 demos/demo_cascade.py
"""

from fractions import Fraction

from walshuniv import (ScheduleInfeasible, build_cascade, choose_schedule,
                       verify_cascade)
from walshuniv.geometry import DyadicInterval

# One quantitative round on [0, 1/2) with gamma = 1, eps = 9/10.  The
# minimal schedule is (13, 15, 17, 19) over four sub-intervals.
sched = choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10),
                        Fraction(1), 1)
print("levels:", sched.levels, " feasibility:", sched.feasibility)
pair = build_cascade(sched)
rep = verify_cascade(pair)
print(rep.summary())

# The same parameters with q = 2 are certifiably out of reach: the second
# round would need one cut level per smallest interval of the exceptional
# set, and that count scales like |E-tilde| * 2^(K_last + 1).
try:
    choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10), Fraction(1), 2)
except ScheduleInfeasible as e:
    print(f"\nq = 2 refused: {e}")

# Toy mode runs the full recursion structurally: nested half-cells, exact
# measures 2^-q |Delta|, the decomposition identity, the sign layout.
toy = build_cascade(choose_schedule(1, DyadicInterval(1, 0), None,
                                    Fraction(2), 3, mode="toy"))
print("\ntoy q=3 exceptional measure:", toy.etilde_measure(), "= |Delta|/8")
print(verify_cascade(toy).summary())
