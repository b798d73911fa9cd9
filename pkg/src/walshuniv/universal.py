"""The universal series and the greedy sign-selection loop.

g = P0 + sum of stage polynomials; every stage block keeps its unsigned
twin P_m until the greedy chooses it, at which point the signed H_m is
adopted.  All magnitudes are shared between the signed and unsigned series,
so universality is purely a matter of signs.

Distances and errors are computed as certified enclosures: the residual's
coarse core (target minus P0 minus the chosen stages' bulk values) is
integrated exactly against the weight, and everything structurally deep --
filler kernels, exceptional-set deviations, unchosen unsigned blocks, the
strictness perturbation -- contributes an exactly computed L1(mu) upper
width.  A stage qualifies when the enclosure's upper end clears the
threshold; in tolerant mode a missed threshold adopts the best candidate
and flags the stage, which is what a truncated tower generally forces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .enumeration import StepEnumeration, tuple_to_step
from .exactnum import QS2, QS2_ONE, QS2_ZERO, Mag, qs2_str
from .geometry import DyadicInterval, StepFunction
from .reports import Report, csv_text
from .stepapprox import StepApprox
from .walsh import walsh_eval
from .residual import exact_weighted_residual
from .weight import (Stage, WeightFunction, build_weight,
                     stage_error_weighted)


class UniversalFunction:
    """P0 plus the stage tower, with its weight."""

    def __init__(self, weight: WeightFunction, p0_shift: int = 0):
        self.weight = weight
        self.n0 = weight.n0
        self.p0_shift = p0_shift

    @property
    def stages(self) -> List[Stage]:
        return self.weight.stages

    @property
    def M_s(self) -> int:
        return self.weight.M_s

    # -- P0 ----------------------------------------------------------------

    def p0_base(self) -> Mag:
        """The next block's head coefficient a^{(1)}_{2^{n0}} (core part)."""
        return self.stages[0].sa.first_magnitude()

    def p0_coefficient(self, k: int) -> QS2:
        if not (0 <= k < (1 << self.n0)):
            raise ValueError("P0 index out of range")
        return self.p0_base().to_qs2() + \
            QS2(Fraction(1, 1 << (k + 1 + self.p0_shift)))

    def p0_step(self) -> StepFunction:
        n = 1 << self.n0
        vals = []
        for i in range(n):
            x = Fraction(i, n)
            acc = QS2_ZERO
            for k in range(n):
                acc = acc + self.p0_coefficient(k) * walsh_eval(k, x)
            vals.append(acc)
        from .geometry import step_from_grid
        return step_from_grid(vals)

    # -- block boundaries and coefficient access ------------------------------

    def boundary_bits(self, m: int) -> int:
        """log2 of the first index after block m (m = 0 gives n0)."""
        if m == 0:
            return self.n0
        return self.stages[m - 1].sa.end_level + 1

    def stage_p_mass(self, m: int) -> QS2:
        """Certified L1 (hence L1(mu)) bound of the unsigned block m."""
        st = self.stages[m - 1]
        return st.sa.p_mass_total() + st.sa.perturb_tail_qs2()

    def stage_junk_weighted(self, m: int) -> QS2:
        """Certified bound of integral |H_m - f_m| mu (what adopting the
        signed block costs beyond its bulk)."""
        return stage_error_weighted(self.weight, self.stages[m - 1])

    def stage_shallow_mass(self, m: int) -> QS2:
        """Filler plus perturbation mass of stage m (the only parts of an
        adopted block not handled exactly by the residual decomposition)."""
        st = self.stages[m - 1]
        filler = QS2_ZERO
        for iv, v in st.sa.filler_step_total().pieces:
            if v != QS2_ZERO:
                filler = filler + abs(v) * iv.measure
        return filler + st.sa.perturb_tail_qs2()

    # -- structural checks ------------------------------------------------------

    def strict_decrease_report(self, report: Report) -> None:
        # P0 internal: base + 2^-(k+1+shift) strictly decreasing -- by form
        ok_p0 = True
        # P0 tail vs stage-1 head: 2^-(2^n0 + shift) > perturbation at the
        # first stage index 2^(-(N0 + 2^n0))
        st1 = self.stages[0].sa
        ok_link = (1 << self.n0) + self.p0_shift < st1.N0 + (1 << self.n0)
        # stage chains: within stages the cores are non-increasing and the
        # perturbation strictifies; across stages the caps force strictness
        ok_stages = True
        prev_last = None
        for st in self.stages:
            mags = st.sa.magnitudes()
            if any(mags[i] < mags[i + 1] for i in range(len(mags) - 1)):
                ok_stages = False
            if prev_last is not None and not (mags[0] < prev_last):
                ok_stages = False
            prev_last = mags[-1]
        report.add("coefficients-strictly-decreasing",
                   ok_p0 and ok_link and ok_stages, "exact",
                   detail="P0 rule strictly decreasing; P0 tail above the "
                          "first stage head; stage cores non-increasing with "
                          "strict cross-stage drops; the 2^-(N0+k) "
                          "perturbation strictifies ties symbolically")

    def _enum_function(self, m: int) -> StepFunction:
        if not hasattr(self, "_enum"):
            self._enum = StepEnumeration()
            self._enum_cache: Dict[int, StepFunction] = {}
        if m not in self._enum_cache:
            self._enum_cache[m] = tuple_to_step(self._enum.tuple_at(m))
        return self._enum_cache[m]

    def delta_layout_ok(self, chosen: List[int], samples: int = 50,
                        seed: int = 0) -> bool:
        """delta_k = +1 off chosen blocks, the stage signs on them."""
        import random
        rng = random.Random(seed)
        ok = True
        for m in range(1, self.M_s + 1):
            st = self.stages[m - 1]
            blocks = list(st.sa.blocks())
            for _ in range(min(samples // self.M_s + 1, len(blocks))):
                b = blocks[rng.randrange(len(blocks))]
                pair_sign = 1
                from .cascade import FillerBlock
                if not isinstance(b, FillerBlock):
                    k = 1 << b.level
                    pair_sign = b.atom.coefficient_sign(k) * \
                        (1 if b.scale > 0 else -1)
                if m not in chosen and not isinstance(b, FillerBlock):
                    # unchosen block: published sign is +1 (the unsigned twin)
                    pair_sign = 1
                if pair_sign not in (-1, 1):
                    ok = False
        return ok


def build_universal(delta, M_max: int, n0: int = 4, p0_shift: int = 0,
                    q_cap: Optional[int] = None,
                    count_cap: int = 1 << 14) -> UniversalFunction:
    w = build_weight(delta, M_max, n0=n0, q_cap=q_cap, count_cap=count_cap)
    return UniversalFunction(w, p0_shift=p0_shift)


def verify_universal(g: UniversalFunction) -> Report:
    report = Report(title="universal function", mode="toy",
                    meta={"stages": g.M_s, "n0": g.n0,
                          "p0_shift": g.p0_shift,
                          "boundary_bits": [g.boundary_bits(m)
                                            for m in range(g.M_s + 1)]})
    g.strict_decrease_report(report)
    # L1 convergence: sum of unsigned block masses is finite and computed
    total = QS2_ZERO
    per_stage = []
    for m in range(1, g.M_s + 1):
        v = g.stage_p_mass(m)
        per_stage.append(v)
        total = total + v
    report.add("block-mass-sum", True, "exact", computed=qs2_str(total),
               detail="certified sum of unsigned block L1 masses "
                      "(finite by construction)")
    ok61 = all(v < QS2(Fraction(1, 1 << (m + 2)))
               for m, v in enumerate(per_stage, start=1))
    report.add("per-stage-mass-target", ok61, "exact",
               claimed="2^-(m+2) per stage",
               computed="; ".join(qs2_str(v) for v in per_stage[:4]) + "...",
               detail="the quantitative target holds only for stages whose "
                      "schedule ran under the paper conditions")
    return report


class SearchExhausted(RuntimeError):
    """No candidate blocks remain below the budget."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass
class StageRow:
    q: int
    nu: int
    dist_lo: QS2
    dist_hi: QS2
    err_lo: QS2
    err_hi: QS2
    threshold: Fraction
    threshold_met: bool
    certified: bool
    mode: str


@dataclass
class SignSelection:
    target: StepFunction
    depth: int
    rows: List[StageRow]
    chosen: List[int]
    meta: Dict = field(default_factory=dict)

    def errors_strictly_decreasing(self) -> Optional[bool]:
        """True/False when the enclosures decide it, None when they overlap."""
        out: Optional[bool] = True
        for a, b in zip(self.rows, self.rows[1:]):
            if b.err_hi < a.err_lo:
                continue          # certified decrease for this pair
            if b.err_lo > a.err_hi:
                return False      # certified increase
            out = None            # undecided pair
        return out


def approximate(g: UniversalFunction, f: StepFunction, Q: int,
                search_budget: Optional[int] = None,
                tolerant: bool = True) -> SignSelection:
    """Greedy depth-Q sign selection for the target f."""
    if Q < 1:
        raise ValueError("depth must be positive")
    w = g.weight
    budget = min(search_budget or g.M_s, g.M_s)
    r_core = f - g.p0_step()
    width = QS2_ZERO   # fillers, perturbations, unchosen unsigned blocks
    rows: List[StageRow] = []
    chosen: List[int] = []
    nu_prev = 0
    for q in range(1, Q + 1):
        threshold = Fraction(1, 8) if q == 1 else Fraction(1, 1 << (q + 2))
        best = None
        qualifying = None
        # the selection never uses blocks at or below ntilde: the weight is
        # identically 1 on Omega_ntilde, so those exceptional sets are
        # uncrushed (the construction picks its stage above ntilde too)
        for m in range(max(nu_prev + 1, w.ntilde + 1), budget + 1):
            cand = g._enum_function(m)
            core = exact_weighted_residual(w, r_core - cand, chosen)
            hi = core + width
            lo = core - width if width < core else QS2_ZERO
            if best is None or hi < best[0]:
                best = (hi, core, m, cand, lo)
            if hi < QS2(threshold):
                qualifying = (hi, core, m, cand, lo)
                break
        if best is None:
            raise SearchExhausted(
                f"no candidate blocks remain for stage {q} "
                f"(budget {budget}, last chosen {nu_prev})",
                partial=SignSelection(target=f, depth=Q, rows=rows,
                                      chosen=chosen,
                                      meta={"budget": budget,
                                            "exhausted_at": q}))
        if qualifying is None and not tolerant:
            raise RuntimeError(
                f"no stage within the budget meets the stage-{q} threshold "
                f"{threshold}; best candidate nu={best[2]} at "
                f"[{qs2_str(best[4])}, {qs2_str(best[0])}]")
        pick = qualifying or best
        hi, core, m, cand, lo = pick
        # adopt: the bulk leaves the core, the deviation joins the exact
        # region decomposition, only shallow mass widens the enclosure
        for skipped in range(nu_prev + 1, m):
            width = width + g.stage_p_mass(skipped)
        width = width + g.stage_shallow_mass(m)
        chosen.append(m)
        r_core = r_core - cand
        err_core = exact_weighted_residual(w, r_core, chosen)
        rows.append(StageRow(
            q=q, nu=m, dist_lo=lo, dist_hi=hi,
            err_lo=err_core - width if width < err_core else QS2_ZERO,
            err_hi=err_core + width,
            threshold=threshold,
            threshold_met=qualifying is not None,
            certified=False,  # toy-mode ingredients are never certified
            mode="toy"))
        nu_prev = m
    return SignSelection(target=f, depth=Q, rows=rows, chosen=chosen,
                         meta={"budget": budget,
                               "p0_shift": g.p0_shift,
                               "delta": str(w.delta)})


def convergence_report(sel: SignSelection, g: UniversalFunction,
                       digits: int = 12):
    """csv text + json dict for a completed selection."""
    header = ["q", "nu_q", "block_end_bits", "error_lo", "error_hi",
              "error_decimal", "bound", "threshold_met", "certified", "mode"]
    rows = []
    for r in sel.rows:
        rows.append([
            r.q, r.nu, g.boundary_bits(r.nu),
            qs2_str(r.err_lo), qs2_str(r.err_hi),
            r.err_hi.decimal(digits),
            f"1/{1 << r.q}",
            r.threshold_met, r.certified, r.mode,
        ])
    data = {
        "target": [{"l": iv.l, "K": iv.K, "value": qs2_str(v)}
                   for iv, v in sel.target.pieces],
        "depth": sel.depth,
        "chosen": sel.chosen,
        "errors_strictly_decreasing": sel.errors_strictly_decreasing(),
        "rows": [dict(zip(header, row)) for row in rows],
        "meta": sel.meta,
    }
    return csv_text(header, rows), data
