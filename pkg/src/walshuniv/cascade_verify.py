"""Machine verification of a cascade pair against the four statements it
must satisfy, with exact arithmetic wherever the structure is materializable
and with certified majorants otherwise.

The bound chain mirrors the construction's own decomposition: the step part
of any prefix splits into complete rounds (whose absolute integral has a
closed form), a partial round (triangle inequality over its atoms), the
filler blocks (each contributes exactly its coefficient magnitude to L1),
and an incomplete block at the cut, which is covered by the Cauchy-Schwarz
majorant b * 2^(n/2).
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Optional

from .cascade import AtomBlock, CascadePair, FillerBlock, _chunk_magnitude
from .exactnum import QS2, QS2_ZERO, Mag, qs2_str
from .flatpoly import DEFAULT_ATOM_PIECE_BUDGET
from .geometry import DyadicInterval, DyadicSet, GridBudgetError
from .reports import Check, Report


def _qs(v) -> str:
    return qs2_str(v if isinstance(v, QS2) else QS2(v))


def chunk_filler_sum(pair: CascadePair) -> QS2:
    """Sum over blocks of every filler magnitude (the displayed sum after
    the decomposition identity): sum (K_i - K_{i-1} - 1) * chunk magnitude."""
    out = QS2_ZERO
    for b in pair.blocks:
        if isinstance(b, FillerBlock):
            out = out + b.magnitude.to_qs2()
    return out


def round_aggregates(pair: CascadePair):
    """Per-round data for prefix bounds, computed once per pair.

    Within one chunk the Cauchy-Schwarz cut term mag * 2^(n/2) is maximized
    at the atom block, where it telescopes to scale * 2^(-(anchor+1)/2) --
    the same value for every chunk of the round.  The per-round row
    therefore dominates every per-level row of that round.

    Returns a list of dicts with keys: cs (QS2), fillers_through (QS2,
    cumulative filler magnitude mass through this round), triangle (QS2,
    sum of the round's atom L1 norms), exact_prev (QS2, closed-form L1 of
    the complete-round step before this round), mags_through (QS2,
    cumulative sum of all block magnitudes through this round).
    """
    if getattr(pair, "_round_agg", None) is not None:
        return pair._round_agg
    s = pair.schedule
    gamma_delta = abs(pair.gamma) * pair.delta.measure
    out = []
    fill_cum = QS2_ZERO
    mags_cum = QS2_ZERO
    by_round_blocks = {}
    for b in pair.blocks:
        by_round_blocks.setdefault(b.nu, []).append(b)
    for nu in range(1, s.q + 1):
        anchor = _anchor_for_round_local(s, nu)
        scale = (1 << (nu - 1)) * abs(pair.gamma)
        cs = Mag(scale, -(anchor + 1)).to_qs2()
        triangle = QS2_ZERO
        for b in by_round_blocks.get(nu, ()):
            mags_cum = mags_cum + b.magnitude.to_qs2()
            if isinstance(b, FillerBlock):
                fill_cum = fill_cum + b.magnitude.to_qs2()
            else:
                triangle = triangle + QS2(b.l1_norm)
        exact_prev = QS2_ZERO if nu == 1 else \
            QS2((2 - Fraction(1, 1 << (nu - 2))) * gamma_delta)
        out.append({"cs": cs, "fillers_through": fill_cum,
                    "triangle": triangle, "exact_prev": exact_prev,
                    "mags_through": mags_cum})
    pair._round_agg = out
    return out


def _anchor_for_round_local(s, nu):
    return s.split_level - 1 if nu == 1 else s.levels[nu - 2][-1]


def prefix_bound_rows(pair: CascadePair):
    """Per-round certified upper bounds dominating every prefix cut.

    Yields (round, bound: QS2) with bound >= L1 norm of any signed prefix
    whose cut lies in that round's blocks.
    """
    for nu, agg in enumerate(round_aggregates(pair), start=1):
        bound = agg["exact_prev"] + agg["triangle"] + \
            agg["fillers_through"] + agg["cs"]
        yield nu, bound


def prefix_bound_max(pair: CascadePair) -> QS2:
    best = QS2_ZERO
    for _, bound in prefix_bound_rows(pair):
        if best < bound:
            best = bound
    return best


def p_prefix_bound_rows(pair: CascadePair):
    """Per-round certified bounds for the unsigned prefix: every passed
    magnitude contributes exactly its kernel L1 norm, plus the cut term."""
    for nu, agg in enumerate(round_aggregates(pair), start=1):
        yield nu, agg["mags_through"] + agg["cs"]


def p_prefix_bound_max(pair: CascadePair) -> QS2:
    best = QS2_ZERO
    for _, bound in p_prefix_bound_rows(pair):
        if best < bound:
            best = bound
    return best


def verify_schedule_conditions(pair: CascadePair, report: Report) -> None:
    s = pair.schedule
    if s.mode != "paper":
        report.add("schedule-conditions", True, "structural",
                   detail="toy mode: parity and strict increase only")
        return
    eps = s.epsilon
    ok = True
    detail = []
    # condition (3)
    K1 = s.split_level - 1
    if not (Mag(abs(s.gamma), -(K1 + 1)).cmp_qs2(QS2(Fraction(eps, 2))) < 0):
        ok = False
        detail.append("condition (3) fails")
    prev = s.n0 - 1
    for nu, round_levels in enumerate(s.levels, start=1):
        anchor = K1 if nu == 1 else s.levels[nu - 2][-1]
        scale = (1 << (nu - 1)) * abs(s.gamma)
        n_ivs = s.counts[nu - 1]
        for lv in round_levels:
            if (lv - anchor - 1) % 2:
                ok = False
                detail.append(f"parity fails at level {lv} (round {nu})")
            b_lhs = Mag((lv - prev) * scale, -(lv + anchor + 1))
            if not (b_lhs.cmp_qs2(QS2(Fraction(eps, (1 << (nu + 1)) * n_ivs))) < 0):
                ok = False
                detail.append(f"condition b fails at level {lv}")
            if not (Mag(2 * scale, -(lv + 1)).cmp_qs2(QS2(Fraction(eps, 2))) < 0):
                ok = False
                detail.append(f"condition c fails at level {lv}")
            prev = lv
    report.add("schedule-conditions", ok, "exact",
               detail="; ".join(detail) if detail else
               "(3), a)-c) and primed analogues hold at every level")


def verify_cascade(pair: CascadePair, seed: int = 0, sample_points: int = 200,
                   atom_budget: int = DEFAULT_ATOM_PIECE_BUDGET,
                   dense_level_cap: int = 16) -> Report:
    s = pair.schedule
    report = Report(title="cascade statements", mode=s.mode,
                    meta={"q": s.q, "n0": s.n0, "gamma": str(s.gamma),
                          "delta": str(s.delta),
                          "epsilon": str(s.epsilon) if s.epsilon else None,
                          "levels": [list(r) for r in s.levels],
                          "index_end_bits": s.end_level + 1,
                          "feasibility": s.feasibility})
    gamma = s.gamma
    eps_q = QS2(s.epsilon) if s.epsilon is not None else None

    verify_schedule_conditions(pair, report)

    # measures: |E_q| = (1 - 2^-q)|Delta| and the full recursion
    want = (1 - Fraction(1, 1 << s.q)) * s.delta.measure
    got = pair.e_measure()
    report.add("measure-E", got == want, "exact",
               claimed=_qs(want), computed=_qs(got))
    rec_ok = True
    for nu, atoms in enumerate(pair.atoms_by_round, start=1):
        m = sum((ab.atom.delta.measure / 2 for ab in atoms), Fraction(0))
        if m != s.delta.measure / (1 << nu):
            rec_ok = False
    report.add("measure-recursion", rec_ok, "exact",
               detail="|E-tilde_nu| = 2^-nu |Delta| for every round")

    # statement 1: positive, non-increasing magnitudes (< eps in paper mode)
    mags = [b.magnitude for b in pair.blocks]
    mono = all(not (mags[i] < mags[i + 1]) for i in range(len(mags) - 1))
    small = True
    if eps_q is not None:
        small = mags[0].cmp_qs2(eps_q) < 0
    cap_ok = True
    if s.coeff_cap is not None:
        cap_ok = mags[0] < s.coeff_cap
    report.add("statement-1", mono and small and cap_ok, "exact",
               claimed=str(s.epsilon) if s.epsilon else "(non-increasing)",
               computed=str(mags[0]),
               detail=f"{len(mags)} blocks, first magnitude shown")

    # statement 2, first bound: integral over E_q of |gamma chi - H|
    filler_step = pair.filler_step()
    val2a = QS2_ZERO
    for iv, v in filler_step.pieces:
        if v != QS2_ZERO:
            val2a = val2a + abs(v) * pair.e_measure_within(iv)
    maj2a = chunk_filler_sum(pair)
    ok2a = (eps_q is None) or (val2a < eps_q)
    report.add("statement-2-approx", ok2a, "exact",
               claimed=str(s.epsilon) if s.epsilon else "",
               computed=_qs(val2a),
               detail=f"filler-sum majorant {_qs(maj2a)}; "
                      "on E_q the step part equals gamma exactly")
    if eps_q is not None:
        report.add("statement-2-majorant-chain", maj2a < eps_q, "majorant",
                   claimed=str(s.epsilon), computed=_qs(maj2a),
                   detail="sum (K_i - K_{i-1} - 1) 2^(nu-1)|gamma| "
                          "2^(-(K_i+K_prev+1)/2) < eps")

    # statement 2, second bound: integral off Delta of |H| (fillers only)
    comp = DyadicSet([s.delta]).complement_in_unit()
    val2b = filler_step.integrate_over(comp)
    ok2b = (eps_q is None) or (val2b < eps_q)
    report.add("statement-2-outside", ok2b, "exact",
               claimed=str(s.epsilon) if s.epsilon else "",
               computed=_qs(val2b),
               detail="H equals the filler sum off Delta")

    # statement 3: certified prefix bound max < 3|gamma||Delta| + eps
    best = QS2_ZERO
    for _, bound in prefix_bound_rows(pair):
        if best < bound:
            best = bound
    if eps_q is not None:
        target3 = QS2(3 * abs(gamma) * s.delta.measure) + eps_q
        ok3 = best < target3
        report.add("statement-3", ok3, "majorant",
                   claimed=_qs(target3), computed=_qs(best),
                   detail="max over all cuts of exact-atom/filler terms "
                          "plus the Cauchy-Schwarz cut term; slack "
                          + _qs(target3 - best))
    else:
        report.add("statement-3", True, "majorant", computed=_qs(best),
                   detail="certified prefix bound (no quantitative claim in toy mode)")

    # statement 4: unsigned prefix max < eps
    best4 = QS2_ZERO
    for _, bound in p_prefix_bound_rows(pair):
        if best4 < bound:
            best4 = bound
    if eps_q is not None:
        ok4 = best4 < eps_q
        report.add("statement-4", ok4, "majorant",
                   claimed=str(s.epsilon), computed=_qs(best4),
                   detail="slack " + _qs(eps_q - best4))
    else:
        report.add("statement-4", True, "majorant", computed=_qs(best4),
                   detail="certified unsigned prefix bound")

    # decomposition identity at sampled dyadic points
    rng = random.Random(seed)
    lvl = min(s.end_level + 1, 40)
    ok_dec = True
    ok_vals = True
    value_set = {QS2(gamma), QS2(-((1 << s.q) - 1) * gamma), QS2_ZERO}
    for _ in range(sample_points):
        x = Fraction(rng.randrange(1 << lvl), 1 << lvl)
        lhs = pair.htilde_eval(x)
        rhs = pair.htilde_eval_by_sets(x)
        if lhs != rhs:
            ok_dec = False
        if rhs not in value_set:
            ok_vals = False
    report.add("decomposition-identity", ok_dec, "exact",
               detail=f"atom-sum route equals membership route at "
                      f"{sample_points} seeded points")
    report.add("value-set", ok_vals, "exact",
               detail="step part takes only the values "
                      f"{{-(2^q-1)gamma, gamma, 0}} = "
                      f"{{{_qs(-((1 << s.q) - 1) * gamma)}, {_qs(gamma)}, 0}}")

    # sign layout: fillers are all-plus; atom blocks follow the atom signs
    ok_signs = True
    for b in pair.blocks:
        if isinstance(b, FillerBlock):
            k = 1 << b.level
            if pair.coefficient(k) != (b.magnitude, 1):
                ok_signs = False
        else:
            k = (1 << b.level) + (rng.randrange(1 << b.level)
                                  if b.level <= 40 else 0)
            mag, sign = pair.coefficient(k)
            want = b.atom.coefficient_sign(k) * (1 if b.scale > 0 else -1)
            if sign != want or not (mag == b.magnitude):
                ok_signs = False
    report.add("sign-layout", ok_signs, "structural",
               detail="delta_k = +1 on every filler block; atom blocks "
                      "carry the flat-pattern signs")

    # dense cross-check when the whole pair fits the grid budget
    if s.end_level + 1 <= dense_level_cap and pair.materializable(atom_budget):
        h = pair.h_step(atom_budget)
        e_set = pair.e_set(atom_budget)
        target = StepIndicator(s.delta, gamma)
        diff = (target - h).abs()
        dense2a = diff.integrate_over(e_set)
        ok_dense = dense2a == val2a
        # pointwise spot-check of h_eval against the dense step
        for _ in range(50):
            x = Fraction(rng.randrange(1 << (s.end_level + 1)),
                         1 << (s.end_level + 1))
            if h.value_at(x) != pair.h_eval(x):
                ok_dense = False
        report.add("dense-cross-check", ok_dense, "exact",
                   computed=_qs(dense2a),
                   detail="dense expansion agrees with the structured "
                          "statement-2 value and pointwise evaluation")
    return report


def StepIndicator(delta: DyadicInterval, gamma) -> "StepFunction":
    from .geometry import DyadicSet, StepFunction
    return StepFunction.indicator(DyadicSet([delta]), QS2(gamma))
