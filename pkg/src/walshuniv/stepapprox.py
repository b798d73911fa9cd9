"""Step-function approximation by chained cascades (one per piece), with a
perturbation that makes the coefficient sequence strictly decreasing.

Given a dyadic step function f with nonzero values, every piece receives its
own cascade; piece j+1's coefficients start strictly below piece j's last
one (enforced by lifting the first cut level, not by shrinking the
quantitative tolerance -- shrinking it would make the split level and hence
the interval count grow hyper-exponentially along the chain).

Paper mode refines the partition until 3 |gamma_j| |Delta_j| < eps/8 and
runs the quantitative schedule conditions at per-piece tolerance
min(eps/2^(j+1), eps/(8 nu0), eps/(8 nu0^2)); the first piece gets the
smallest q with 2^-q < eps and later pieces q = 1, which keeps the
exceptional measure strictly above 1 - eps while staying materially finite.

The strictness perturbation adds 2^-(N0+k) to coefficient k.  It is never
expanded: all verified bounds carry its total mass (< 2^-(N0 + first index
- 1)) as a certified enclosure term, and strict decrease holds symbolically:
a non-increasing core plus a strictly decreasing positive perturbation is
strictly decreasing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .cascade import (AtomBlock, CascadePair, FillerBlock, Schedule,
                      ScheduleInfeasible, build_cascade, choose_schedule)
from .cascade_verify import p_prefix_bound_rows, prefix_bound_rows
from .exactnum import QS2, QS2_ZERO, Mag, qs2_str
from .geometry import DyadicInterval, DyadicSet, StepFunction
from .reports import Report


@dataclass
class PieceRun:
    piece: DyadicInterval
    gamma: Fraction
    pair: CascadePair

    @property
    def q(self) -> int:
        return self.pair.q


class StepApprox:
    """The (P, H) pair approximating a step function off a small set."""

    def __init__(self, target: StepFunction, runs: List[PieceRun], n0: int,
                 N0: int, mode: str, epsilon: Optional[Fraction]):
        self.target = target
        self.runs = runs
        self.n0 = n0
        self.N0 = N0
        self.mode = mode
        self.epsilon = epsilon

    # -- index range -----------------------------------------------------------

    @property
    def end_level(self) -> int:
        return self.runs[-1].pair.schedule.end_level

    @property
    def index_start(self) -> int:
        return 1 << self.n0

    @property
    def index_end(self) -> int:
        return 1 << (self.end_level + 1)

    def blocks(self):
        for run in self.runs:
            yield from run.pair.blocks

    def magnitudes(self) -> List[Mag]:
        return [b.magnitude for b in self.blocks()]

    def first_magnitude(self) -> Mag:
        return self.runs[0].pair.blocks[0].magnitude

    def last_magnitude(self) -> Mag:
        return self.runs[-1].pair.blocks[-1].magnitude

    # -- perturbation ------------------------------------------------------------

    def perturb_tail_upper(self) -> Mag:
        """Certified bound of sum_k 2^-(N0+k) over the whole index range."""
        return Mag(1, -2 * (self.N0 + self.index_start - 1))

    def perturb_tail_qs2(self) -> QS2:
        """Representable upper bound of the perturbation mass."""
        return self.perturb_tail_upper().to_qs2_upper()

    def perturbed_first_upper(self) -> QS2:
        return self.first_magnitude().to_qs2() + self.perturb_tail_qs2()

    # -- exceptional set ------------------------------------------------------------

    def e_measure(self) -> Fraction:
        return 1 - sum((Fraction(run.piece.measure, 1 << run.q)
                        for run in self.runs), Fraction(0))

    def etilde_measure_within(self, iv: DyadicInterval) -> Fraction:
        return sum((run.pair.etilde_measure_within(iv) for run in self.runs),
                   Fraction(0))

    def e_measure_within(self, iv: DyadicInterval) -> Fraction:
        return iv.measure - self.etilde_measure_within(iv)

    # -- step structure ---------------------------------------------------------------

    def filler_step_total(self) -> StepFunction:
        f = StepFunction.constant(0)
        for run in self.runs:
            f = f + run.pair.filler_step()
        return f

    def h_core_eval(self, x: Fraction) -> QS2:
        out = QS2_ZERO
        for run in self.runs:
            out = out + run.pair.h_eval(x)
        return out

    def p_core_eval(self, x: Fraction) -> QS2:
        out = QS2_ZERO
        for run in self.runs:
            out = out + run.pair.p_eval(x)
        return out

    # -- certified norms ------------------------------------------------------------------

    def approx_error_core(self, subset=None) -> QS2:
        """Exact integral over E (or a subset of it) of |f - H core|.

        On the exceptional complement the step part of H equals f, so the
        integrand is exactly the filler sum there.
        """
        total = QS2_ZERO
        for iv, v in self.filler_step_total().pieces:
            if v != QS2_ZERO:
                m = subset.measure_within(iv) if subset is not None \
                    else self.e_measure_within(iv)
                if m:
                    total = total + abs(v) * m
        return total

    def p_prefix_max_upper(self) -> QS2:
        """Certified bound of every unsigned prefix L1 norm (core)."""
        total = QS2_ZERO
        for run in self.runs:
            best = QS2_ZERO
            for _, bound in p_prefix_bound_rows(run.pair):
                if best < bound:
                    best = bound
            total = total + best
        return total

    def p_mass_total(self) -> QS2:
        """Exact L1 mass bound of the full unsigned core: sum of magnitudes
        (each full block is a kernel of L1 norm equal to its magnitude)."""
        out = QS2_ZERO
        for b in self.blocks():
            out = out + b.magnitude.to_qs2()
        return out

    def h_prefix_rows(self, e=None):
        """(run, round, UB) rows bounding the signed prefix L1 norms over e
        (e = None means all of [0,1]); one dominating row per round."""
        from .cascade_verify import round_aggregates
        cross = QS2_ZERO       # completed runs: exact |f|-mass over e
        fillers_prev = QS2_ZERO  # completed runs' filler magnitudes
        for j, run in enumerate(self.runs):
            agg = round_aggregates(run.pair)
            for nu, a in enumerate(agg, start=1):
                row = a["exact_prev"] + a["triangle"] + \
                    a["fillers_through"] + a["cs"]
                yield j, nu, cross + fillers_prev + row
            if e is None:
                full = (2 - Fraction(1, 1 << (run.q - 1))) * abs(run.gamma) \
                    * run.piece.measure
                cross = cross + QS2(full)
            else:
                cross = cross + QS2(abs(run.gamma)) * e.measure_within(run.piece)
            fillers_prev = fillers_prev + agg[-1]["fillers_through"]

    def subset_integral_of_target(self, e) -> QS2:
        out = QS2_ZERO
        for iv, v in self.target.pieces:
            if v != QS2_ZERO:
                out = out + abs(v) * e.measure_within(iv)
        return out


class _WholeE:
    """The exceptional complement itself, as a measure-query object."""

    def __init__(self, sa: StepApprox):
        self.sa = sa

    def measure_within(self, iv: DyadicInterval) -> Fraction:
        return self.sa.e_measure_within(iv)

    @property
    def measure(self) -> Fraction:
        return self.sa.e_measure()


class _QuerySubset:
    """E intersected with an explicit dyadic set (still a subset of E)."""

    def __init__(self, sa: StepApprox, shape: DyadicSet):
        self.sa = sa
        self.shape = shape

    def measure_within(self, iv: DyadicInterval) -> Fraction:
        total = Fraction(0)
        for a, b in self.shape.intersect(DyadicSet([iv]))._runs():
            from .geometry import _intervals_from_run
            for piece in _intervals_from_run(a, b):
                total += self.sa.e_measure_within(piece)
        return total

    @property
    def measure(self) -> Fraction:
        return self.measure_within(DyadicInterval(0, 0))


def safe_cell_sample(sa: StepApprox, rng: random.Random, max_cells: int = 6) -> DyadicSet:
    """An explicit union of +1 half-cells of final-round atoms (always
    inside the exceptional complement)."""
    ivs = []
    for _ in range(max_cells):
        run = rng.choice(sa.runs)
        atoms = run.pair.final_atoms()
        ab = atoms[rng.randrange(len(atoms))]
        t = ab.atom.t
        c = rng.randrange(1 << min(t, 48)) if t else 0
        side = 1 - ab.atom.minus_cell_side(c)
        d = ab.atom.delta
        base = d.l << (ab.atom.M + 1 - d.K)
        ivs.append(DyadicInterval(ab.atom.M + 1, base + 2 * c + side))
    return DyadicSet(ivs)


def build_step_approx(f: StepFunction, epsilon, n0: int, mode: str = "paper",
                      q_default: Optional[int] = None,
                      coeff_cap: Optional[Mag] = None,
                      index_bit_cap: int = 20000,
                      count_cap: int = 1 << 21) -> StepApprox:
    """One cascade per piece of f, chained so coefficients never increase."""
    epsilon = Fraction(epsilon) if epsilon is not None else None
    for _, v in f.pieces:
        if v == QS2_ZERO or not v.is_rational():
            raise ValueError("target pieces must carry nonzero rational values")

    if mode == "paper":
        if not (0 < epsilon < 1):
            raise ValueError("epsilon in (0,1) required")
        gmax = max(abs(v.a) for _, v in f.pieces)
        L = f.max_level
        while 3 * gmax * Fraction(1, 1 << L) >= Fraction(epsilon, 8):
            L += 1
        pieces = [(sub, v.a) for iv, v in f.pieces
                  for sub in iv.split_to_level(L)]
        nu0 = len(pieces)
        # q assignment: first piece deep enough for strictness of the measure
        q1 = 1
        while Fraction(1, 1 << q1) >= epsilon:
            q1 += 1
        qs = [q1] + [1] * (nu0 - 1)
        deficit = sum(Fraction(iv.measure, 1 << q) for (iv, _), q in zip(pieces, qs))
        if deficit >= epsilon:
            raise ScheduleInfeasible(
                "cannot reach measure > 1 - eps with the feasible q assignment",
                estimated_count=nu0)
    else:
        pieces = [(iv, v.a) for iv, v in f.pieces]
        nu0 = len(pieces)
        qs = [q_default or 1] * nu0

    runs: List[PieceRun] = []
    cap = coeff_cap
    cursor_n0 = n0
    for j, ((iv, gamma), q) in enumerate(zip(pieces, qs), start=1):
        if mode == "paper":
            eps_main = min(Fraction(epsilon, 1 << (j + 1)),
                           Fraction(epsilon, 8 * nu0),
                           Fraction(epsilon, 8 * nu0 * nu0))
            sched = choose_schedule(cursor_n0, iv, eps_main, gamma, q, "paper",
                                    coeff_cap=cap, index_bit_cap=index_bit_cap,
                                    count_cap=count_cap)
        else:
            # deeper recursion may be blocked by the fragment growth of a
            # lifted first level; fall back to the deepest feasible q
            sched = None
            for q_try in range(q, 0, -1):
                try:
                    sched = choose_schedule(cursor_n0, iv, None, gamma, q_try,
                                            "toy", coeff_cap=cap,
                                            index_bit_cap=index_bit_cap,
                                            count_cap=count_cap)
                    break
                except ScheduleInfeasible:
                    if q_try == 1:
                        raise
        pair = build_cascade(sched)
        runs.append(PieceRun(iv, gamma, pair))
        cap = pair.last_magnitude()
        cursor_n0 = sched.end_level + 1

    # perturbation shift: N0 > log2(2/eps) when quantitative, plus keep the
    # first perturbed coefficient under eps
    if epsilon is not None:
        N0 = 1
        while Fraction(1, 1 << N0) >= Fraction(epsilon, 2):
            N0 += 1
        sa = StepApprox(f, runs, n0, N0, mode, epsilon)
        while not (sa.perturbed_first_upper() < QS2(epsilon)):
            N0 += 1
            sa = StepApprox(f, runs, n0, N0, mode, epsilon)
        return sa
    return StepApprox(f, runs, n0, max(1, n0), mode, None)


def verify_step_approx(sa: StepApprox, seed: int = 0, n_subsets: int = 50) -> Report:
    report = Report(title="step-function approximation", mode=sa.mode,
                    meta={"pieces": len(sa.runs),
                          "qs": [r.q for r in sa.runs],
                          "epsilon": str(sa.epsilon) if sa.epsilon else None,
                          "n0": sa.n0, "N0": sa.N0,
                          "index_end_bits": sa.end_level + 1,
                          "total_blocks": sum(1 for _ in sa.blocks())})
    epsq = QS2(sa.epsilon) if sa.epsilon is not None else None

    # exceptional measure, strictly above 1 - eps
    got = sa.e_measure()
    if epsq is not None:
        ok = QS2(got) > QS2(1) - epsq
        report.add("measure-E", ok, "exact", claimed=f"> {1 - sa.epsilon}",
                   computed=str(got))
    else:
        report.add("measure-E", True, "exact", computed=str(got))

    # statement 1: strictly decreasing coefficients
    mags = sa.magnitudes()
    mono = all(not (mags[i] < mags[i + 1]) for i in range(len(mags) - 1))
    run_edges_strict = True
    edge = 0
    for run in sa.runs[:-1]:
        edge += len(run.pair.blocks)
        if not (mags[edge] < mags[edge - 1]):
            run_edges_strict = False
    first_ok = True
    if epsq is not None:
        first_ok = sa.perturbed_first_upper() < epsq
    report.add("statement-1", mono and run_edges_strict and first_ok, "exact",
               claimed=str(sa.epsilon) if sa.epsilon else "(strict decrease)",
               computed=qs2_str(sa.first_magnitude().to_qs2()),
               detail="core magnitudes non-increasing (strict across piece "
                      "chains); the 2^-(N0+k) perturbation strictifies every "
                      "remaining tie symbolically")

    # statement 2: error over E
    tail = sa.perturb_tail_qs2()
    val2 = sa.approx_error_core() + tail
    report.add("statement-2", (epsq is None) or (val2 < epsq),
               "exact" if epsq else "enclosure",
               claimed=str(sa.epsilon) if sa.epsilon else "",
               computed=qs2_str(val2),
               detail="filler mass over E plus the perturbation tail")

    # statement 3: for E itself and seeded dyadic subsets of it
    rng = random.Random(seed)
    subsets = [("E", _WholeE(sa))]
    for i in range(n_subsets):
        if i % 2 == 0:
            shape_ivs = []
            for _ in range(rng.randrange(1, 4)):
                K = rng.randrange(0, 6)
                shape_ivs.append(DyadicInterval(K, rng.randrange(1 << K)))
            subsets.append((f"sub{i}", _QuerySubset(sa, DyadicSet(shape_ivs))))
        else:
            cells = safe_cell_sample(sa, rng)
            subsets.append((f"cells{i}", _QuerySubset(sa, cells)))
    all_ok = True
    worst = ""
    for name, e in subsets:
        best = QS2_ZERO
        for _, _, bound in sa.h_prefix_rows(e):
            if best < bound:
                best = bound
        best = best + tail
        rhs = sa.subset_integral_of_target(e)
        if epsq is not None:
            if not (best < rhs + epsq):
                all_ok = False
                worst = f"{name}: {qs2_str(best)} !< {qs2_str(rhs + epsq)}"
    report.add("statement-3", all_ok if epsq is not None else True, "majorant",
               claimed="int_e |f| + eps for e in the sampled family",
               computed=worst or "all sampled subsets within bound",
               detail=f"e = E plus {n_subsets} seeded dyadic subsets")

    # statement 4: unsigned prefixes
    val4 = sa.p_prefix_max_upper() + tail
    report.add("statement-4", (epsq is None) or (val4 < epsq), "majorant",
               claimed=str(sa.epsilon) if sa.epsilon else "",
               computed=qs2_str(val4),
               detail="sum over pieces of per-cascade prefix bounds")
    return report
