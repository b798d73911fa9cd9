"""The inductive cascade: schedules, assembly, and machine verification.

A cascade approximates gamma * chi_Delta by a signed Walsh polynomial H and
its unsigned twin P.  Round nu applies one flat atom (scaled by
+-2^(nu-1) gamma) to each maximal interval of the previous exceptional set;
the index gaps between atom blocks are filled by constant-coefficient
all-plus blocks.  After q rounds the exceptional set has measure
2^(-q) |Delta|.

Two modes:

* paper -- every cut level is the minimal one satisfying the quantitative
  conditions (the parity condition, the filler-mass bound, the tail bound),
  all checked exactly.  Flat atoms keep M >= K + 2 here so the cited flat
  polynomial lemma applies verbatim.
* toy -- caller-supplied or auto-generated compact levels; only structural
  conditions are enforced (parity with M >= K, strict level increase).
  This is what makes q >= 2 runnable at desk scale; the quantitative
  conditions make the round-(nu+1) interval count grow like
  sum_i 2^(K_i - K_split), which is astronomically infeasible -- the
  schedule search detects and reports that.

Verification never expands an atom unless its piece count fits the budget;
set measures are answered by O(t) atom queries and L1 bounds use exact
filler/kernel masses plus the Cauchy-Schwarz majorant for mid-block cuts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exactnum import QS2, QS2_ZERO, Mag, qs2_str
from .flatpoly import DEFAULT_ATOM_PIECE_BUDGET, FlatPoly
from .geometry import (DyadicInterval, DyadicSet, GridBudgetError,
                       StepFunction, UNIT)
from .walsh import l1_prefix_majorant, upper_kernel_eval

DEFAULT_INDEX_BIT_CAP = 20000     # levels beyond this are refused outright
DEFAULT_COUNT_CAP = 1 << 21        # max intervals handled in one round


class ScheduleInfeasible(Exception):
    """A schedule cannot be realized within the configured budgets."""

    def __init__(self, message, round_nu=None, estimated_count=None,
                 estimated_max_level=None):
        super().__init__(message)
        self.round_nu = round_nu
        self.estimated_count = estimated_count
        self.estimated_max_level = estimated_max_level


@dataclass(frozen=True)
class AtomBlock:
    """One flat atom scaled by `scale` = +-2^(nu-1) gamma, at `level` = M."""
    level: int
    atom: FlatPoly
    scale: Fraction
    nu: int
    i: int

    @property
    def magnitude(self) -> Mag:
        return self.atom.magnitude * abs(self.scale)

    @property
    def l1_norm(self) -> Fraction:
        return abs(self.scale) * self.atom.delta.measure


@dataclass(frozen=True)
class FillerBlock:
    """Full level-n block with constant coefficient `magnitude`, signs +1."""
    level: int
    magnitude: Mag
    nu: int
    i: int


Block = object  # AtomBlock | FillerBlock


@dataclass
class Schedule:
    """Cut levels for one cascade, plus how they were chosen."""
    n0: int
    delta: DyadicInterval
    gamma: Fraction
    q: int
    mode: str                      # "paper" | "toy"
    epsilon: Optional[Fraction]
    split_level: int               # level of the round-1 intervals
    levels: List[List[int]]        # cut level per (nu, i)
    counts: List[int]              # N_nu
    coeff_cap: Optional[Mag] = None
    feasibility: Dict = field(default_factory=dict)

    @property
    def end_level(self) -> int:
        return self.levels[-1][-1]

    @property
    def index_end(self) -> int:
        """First index after the cascade: 2^(end_level + 1)."""
        return 1 << (self.end_level + 1)


def _chunk_magnitude(gamma: Fraction, nu: int, cut: int, anchor: int) -> Mag:
    """2^(nu-1) |gamma| 2^(-(cut + anchor + 1)/2)."""
    return Mag(abs(gamma) * (1 << (nu - 1)), -(cut + anchor + 1))


def _anchor_for_round(split_level: int, levels: List[List[int]], nu: int) -> int:
    """The paper's K_1 for round 1, K_{N_{nu-1}}^{(nu-1)} afterwards."""
    return split_level - 1 if nu == 1 else levels[nu - 2][-1]


def choose_schedule(n0: int, delta: DyadicInterval, epsilon, gamma: Fraction,
                    q: int, mode: str = "paper",
                    toy_levels: Optional[List[List[int]]] = None,
                    coeff_cap: Optional[Mag] = None,
                    index_bit_cap: int = DEFAULT_INDEX_BIT_CAP,
                    count_cap: int = DEFAULT_COUNT_CAP) -> Schedule:
    """Choose cut levels for a q-round cascade on `delta`.

    paper mode scans each level minimally against the exact conditions;
    toy mode either validates injected levels structurally or generates the
    compact nested chain (one interval per round, M = interval level).
    """
    if q < 1 or n0 < 1:
        raise ValueError("need q >= 1 and n0 >= 1")
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    if mode == "paper":
        epsilon = Fraction(epsilon)
        if not (0 < epsilon < 1):
            raise ValueError("epsilon must lie in (0,1)")
        return _paper_schedule(n0, delta, epsilon, gamma, q, coeff_cap,
                               index_bit_cap, count_cap)
    if mode == "toy":
        return _toy_schedule(n0, delta, gamma, q, toy_levels, coeff_cap,
                             index_bit_cap, count_cap)
    raise ValueError(f"unknown mode {mode!r}")


def _paper_schedule(n0, delta, epsilon, gamma, q, coeff_cap,
                    index_bit_cap, count_cap) -> Schedule:
    K = delta.K
    half_eps = Fraction(epsilon, 2)
    # condition (3): smallest K1 > K with |gamma| 2^(-(K1+1)/2) < eps/2
    K1 = K + 1
    while not _mag_lt(Mag(abs(gamma), -(K1 + 1)), half_eps):
        K1 += 1
        if K1 > index_bit_cap:
            raise ScheduleInfeasible("split level exceeds the index bit cap",
                                     round_nu=1, estimated_max_level=K1)
    split_level = K1 + 1
    N1 = 1 << (split_level - K)
    if N1 > count_cap:
        raise ScheduleInfeasible(
            f"round 1 needs {N1} intervals (> cap {count_cap})",
            round_nu=1, estimated_count=N1)

    levels: List[List[int]] = []
    counts: List[int] = []
    prev_cut = n0 - 1
    cap = coeff_cap
    for nu in range(1, q + 1):
        anchor = split_level - 1 if nu == 1 else levels[-1][-1]
        if nu == 1:
            n_ivs = N1
        else:
            # the exceptional set is re-split into uniform intervals at
            # level K_last + 1, so each previous atom contributes
            # 2^(K_last - anchor_prev - 1) of them.
            n_ivs = counts[-1] * (1 << (anchor - anchor_prev - 1))
            if n_ivs > count_cap:
                raise ScheduleInfeasible(
                    f"round {nu} needs {n_ivs} intervals (> cap {count_cap}); "
                    f"the recursion scales like |E-tilde| * 2^(K_last + 1)",
                    round_nu=nu, estimated_count=n_ivs)
            # levels are parity-spaced >= 2 apart, so the round certifiably
            # ends at or beyond prev + 2 n_ivs
            if prev_cut + 2 * n_ivs > index_bit_cap:
                raise ScheduleInfeasible(
                    f"round {nu} needs {n_ivs} cut levels ending beyond "
                    f"level {prev_cut + 2 * n_ivs} (> index bit cap "
                    f"{index_bit_cap})",
                    round_nu=nu, estimated_count=n_ivs,
                    estimated_max_level=prev_cut + 2 * n_ivs)
        round_levels = []
        scale = (1 << (nu - 1)) * abs(gamma)
        bound_b = Fraction(epsilon, (1 << (nu + 1)) * n_ivs)
        for i in range(1, n_ivs + 1):
            lv = _scan_level(prev_cut, anchor, scale, bound_b, half_eps,
                             nu, index_bit_cap,
                             cap if (nu == 1 and i == 1) else None,
                             min_t=2, interval_level=anchor + 1)
            round_levels.append(lv)
            prev_cut = lv
        levels.append(round_levels)
        counts.append(n_ivs)
        anchor_prev = anchor
    sched = Schedule(n0=n0, delta=delta, gamma=gamma, q=q, mode="paper",
                     epsilon=epsilon, split_level=split_level, levels=levels,
                     counts=counts, coeff_cap=coeff_cap)
    sched.feasibility = {"max_level": sched.end_level,
                         "index_end_bits": sched.end_level + 1,
                         "total_atoms": sum(counts)}
    return sched


def _scan_level(prev_cut, anchor, scale, bound_b, half_eps, nu,
                index_bit_cap, cap, min_t, interval_level):
    """Smallest admissible cut level K' > prev_cut."""
    # parity: (K' - anchor - 1) even; start position
    lv = max(prev_cut + 1, interval_level + min_t, anchor + 1)
    if (lv - anchor - 1) % 2:
        lv += 1
    while True:
        if lv > index_bit_cap:
            raise ScheduleInfeasible("cut level exceeds the index bit cap",
                                     round_nu=nu, estimated_max_level=lv)
        ok = True
        # b): (K' - prev) * scale * 2^(-(K'+anchor+1)/2) < bound_b
        lhs = Mag((lv - prev_cut) * scale, -(lv + anchor + 1))
        if not _mag_lt(lhs, bound_b):
            ok = False
        # c): 2^nu |gamma|... given scale = 2^(nu-1)|gamma|: 2*scale*2^(-(K'+1)/2) < eps/2
        if ok and not _mag_lt(Mag(2 * scale, -(lv + 1)), half_eps):
            ok = False
        if ok and cap is not None:
            if not Mag(scale, -(lv + anchor + 1)) < cap:
                ok = False
        if ok:
            return lv
        lv += 2


def _mag_lt(m: Mag, bound: Fraction) -> bool:
    return m.cmp_qs2(QS2(bound)) < 0


def _toy_schedule(n0, delta, gamma, q, toy_levels, coeff_cap,
                  index_bit_cap, count_cap) -> Schedule:
    K = delta.K
    if toy_levels is None:
        # nested chain: one interval per round, M = interval level, except
        # that round 1 may be lifted for parity / the coefficient cap.
        lv = max(n0, K)
        if (lv - K) % 2:
            lv += 1
        if coeff_cap is not None:
            while not Mag(abs(gamma), -(lv + K)) < coeff_cap:
                lv += 2
                if lv > index_bit_cap:
                    raise ScheduleInfeasible("toy chain start exceeds cap",
                                             round_nu=1, estimated_max_level=lv)
        levels = [[lv]]
        counts = [1]
        for nu in range(2, q + 1):
            anchor = levels[-1][-1]
            anchor_prev = K - 1 if nu == 2 else levels[-2][-1]
            frag = counts[-1] * (1 << (anchor - anchor_prev - 1))
            if frag > count_cap:
                raise ScheduleInfeasible(
                    f"toy round {nu} needs {frag} intervals (> cap)",
                    round_nu=nu, estimated_count=frag)
            round_levels = []
            prev = anchor
            for i in range(frag):
                nxt = prev + 1 if i == 0 else prev + 2
                # parity: t = nxt - (anchor + 1) even
                if (nxt - anchor - 1) % 2:
                    nxt += 1
                round_levels.append(nxt)
                prev = nxt
            levels.append(round_levels)
            counts.append(frag)
        split_level = K  # round-1 intervals are delta itself
    else:
        levels = [list(r) for r in toy_levels]
        if len(levels) != q or any(not r for r in levels):
            raise ValueError("toy levels must supply one list per round")
        counts = [len(r) for r in levels]
        n1 = counts[0]
        if n1 & (n1 - 1):
            raise ValueError("round-1 count must be a power of two")
        split_level = K + (n1.bit_length() - 1)
        # structural checks: strict increase and parity per round
        flat = [lv for r in levels for lv in r]
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise ValueError("levels must increase strictly")
        for nu, r in enumerate(levels, start=1):
            anchor = _anchor_for_round(split_level, levels, nu)
            iv_level = anchor + 1
            for lv in r:
                if lv < iv_level or (lv - iv_level) % 2:
                    raise ValueError(
                        f"round {nu} level {lv} breaks parity vs {iv_level}")
        # counts of later rounds must match the fragment structure
        for nu in range(2, q + 1):
            anchor_prev = _anchor_for_round(split_level, levels, nu - 1)
            anchor = levels[nu - 2][-1]
            frag = counts[nu - 2] * (1 << (anchor - anchor_prev - 1))
            if counts[nu - 1] != frag:
                raise ValueError(
                    f"round {nu} needs exactly {frag} levels, got {counts[nu - 1]}")
        if flat[0] < max(n0 - 1, 0):
            raise ValueError("first cut below the start index")
    sched = Schedule(n0=n0, delta=delta, gamma=gamma, q=q, mode="toy",
                     epsilon=None, split_level=split_level, levels=levels,
                     counts=counts, coeff_cap=coeff_cap)
    sched.feasibility = {"max_level": sched.end_level,
                         "index_end_bits": sched.end_level + 1,
                         "total_atoms": sum(counts)}
    return sched


# ---------------------------------------------------------------------------


class CascadePair:
    """The assembled (P, H) pair with its exceptional-set structure."""

    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self.blocks: List[Block] = []
        self.atoms_by_round: List[List[AtomBlock]] = []
        self._assemble()

    # -- assembly -------------------------------------------------------------

    def _assemble(self):
        s = self.schedule
        gamma = s.gamma
        cursor = s.n0  # next unoccupied level
        intervals = self._round1_intervals()
        for nu in range(1, s.q + 1):
            anchor = _anchor_for_round(s.split_level, s.levels, nu)
            round_atoms = []
            scale = Fraction(1 << (nu - 1)) * gamma
            for i, (iv, cut) in enumerate(zip(intervals, s.levels[nu - 1]), 1):
                mag = _chunk_magnitude(gamma, nu, cut, anchor)
                for n in range(cursor, cut):
                    self.blocks.append(FillerBlock(n, mag, nu, i))
                atom = FlatPoly(iv, cut)
                ab = AtomBlock(cut, atom, scale, nu, i)
                self.blocks.append(ab)
                round_atoms.append(ab)
                cursor = cut + 1
            self.atoms_by_round.append(round_atoms)
            if nu < s.q:
                intervals = self._fragments(round_atoms)

    def _round1_intervals(self) -> List[DyadicInterval]:
        s = self.schedule
        if s.split_level == s.delta.K:
            return [s.delta]
        return s.delta.split_to_level(s.split_level)

    def _fragments(self, round_atoms: Sequence[AtomBlock]) -> List[DyadicInterval]:
        """Uniform decomposition of the current exceptional set into
        intervals at level K_last + 1, left to right (the paper's split)."""
        L = max(ab.level for ab in round_atoms) + 1
        out = []
        for ab in round_atoms:
            for iv in ab.atom.minus_set().intervals:
                out.extend(iv.split_to_level(L))
        out.sort(key=lambda iv: iv.left)
        return out

    # -- bookkeeping ------------------------------------------------------------

    @property
    def gamma(self) -> Fraction:
        return self.schedule.gamma

    @property
    def delta(self) -> DyadicInterval:
        return self.schedule.delta

    @property
    def q(self) -> int:
        return self.schedule.q

    @property
    def index_start(self) -> int:
        return 1 << self.schedule.n0

    @property
    def index_end(self) -> int:
        return self.schedule.index_end

    @property
    def levels_used(self) -> List[int]:
        return [b.level for b in self.blocks]

    def final_atoms(self) -> List[AtomBlock]:
        return self.atoms_by_round[-1]

    def magnitudes(self) -> List[Mag]:
        return [b.magnitude if isinstance(b, AtomBlock) else b.magnitude
                for b in self.blocks]

    def first_magnitude(self) -> Mag:
        return self.blocks[0].magnitude if self.blocks else None

    def last_magnitude(self) -> Mag:
        return self.blocks[-1].magnitude

    # -- exceptional set queries ---------------------------------------------------

    def etilde_measure_within(self, iv: DyadicInterval) -> Fraction:
        """|E-tilde_q intersect iv| via atom queries (bisected: the final
        atoms sit on sorted disjoint intervals)."""
        import bisect
        atoms = self.final_atoms()
        if not hasattr(self, "_final_lefts"):
            self._final_lefts = [ab.atom.delta.left for ab in atoms]
            self._final_rights = [ab.atom.delta.right for ab in atoms]
        lo = bisect.bisect_right(self._final_rights, iv.left)
        hi = bisect.bisect_left(self._final_lefts, iv.right)
        return sum((atoms[j].atom.minus_measure_within(iv)
                    for j in range(lo, hi)), Fraction(0))

    def etilde_measure(self) -> Fraction:
        return sum((ab.atom.delta.measure / 2 for ab in self.final_atoms()),
                   Fraction(0))

    def e_measure_within(self, iv: DyadicInterval) -> Fraction:
        """|E_q intersect iv| = |Delta intersect iv| - |E-tilde_q intersect iv|."""
        inter = DyadicSet([self.delta]).measure_within(iv)
        return inter - self.etilde_measure_within(iv)

    def e_measure(self) -> Fraction:
        return self.delta.measure - self.etilde_measure()

    def etilde_set(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> DyadicSet:
        ivs = []
        for ab in self.final_atoms():
            ivs.extend(ab.atom.minus_set(budget).intervals)
        return DyadicSet(ivs)

    def e_set(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> DyadicSet:
        return DyadicSet([self.delta]).minus(self.etilde_set(budget))

    def materializable(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> bool:
        total = 0
        for round_atoms in self.atoms_by_round:
            for ab in round_atoms:
                total += 1 << ab.atom.t
                if total > budget:
                    return False
        return True

    # -- pointwise evaluation ----------------------------------------------------

    def htilde_eval(self, x: Fraction) -> QS2:
        """Sum of all scaled atoms at x (the step part of H)."""
        out = QS2_ZERO
        for round_atoms in self.atoms_by_round:
            for ab in round_atoms:
                if ab.atom.delta.contains_point(x):
                    v = ab.atom.eval(x)
                    if v:
                        out = out + QS2(ab.scale * v)
                    break  # atoms within a round live on disjoint intervals
        return out

    def htilde_eval_by_sets(self, x: Fraction) -> QS2:
        """Independent evaluation by the membership recursion (23)."""
        if not self.delta.contains_point(x):
            return QS2_ZERO
        depth = 0
        for round_atoms in self.atoms_by_round:
            inside = False
            for ab in round_atoms:
                if ab.atom.delta.contains_point(x):
                    if ab.atom.eval(x) == -1:
                        inside = True
                    break
            if not inside:
                break
            depth += 1
        if depth == 0:
            return QS2(self.gamma)
        if depth == len(self.atoms_by_round):
            return QS2(-((1 << depth) - 1) * self.gamma)
        # inside E-tilde_depth but not E-tilde_{depth+1}: value gamma again
        return QS2(self.gamma)

    def fillers_eval(self, x: Fraction) -> QS2:
        out = QS2_ZERO
        for b in self.blocks:
            if isinstance(b, FillerBlock):
                v = upper_kernel_eval(b.level, x)
                if v != QS2_ZERO:
                    out = out + v * b.magnitude.to_qs2()
        return out

    def h_eval(self, x: Fraction) -> QS2:
        return self.htilde_eval(x) + self.fillers_eval(x)

    def p_eval(self, x: Fraction) -> QS2:
        """Unsigned twin: every block becomes magnitude * upper kernel."""
        out = QS2_ZERO
        for b in self.blocks:
            v = upper_kernel_eval(b.level, x)
            if v != QS2_ZERO:
                out = out + v * b.magnitude.to_qs2()
        return out

    # -- step materializations ------------------------------------------------------

    def filler_step(self) -> StepFunction:
        """Exact step function of the filler sum, built from the shell
        structure of the kernels in one pass."""
        return kernel_sum_step([(b.level, b.magnitude) for b in self.blocks
                                if isinstance(b, FillerBlock)])

    def p_step(self) -> StepFunction:
        return kernel_sum_step([(b.level, b.magnitude) for b in self.blocks])

    def h_step(self, budget: int = DEFAULT_ATOM_PIECE_BUDGET) -> StepFunction:
        """Dense-exact H (fillers + every atom), under the piece budget."""
        if not self.materializable(budget):
            raise GridBudgetError("cascade atoms exceed the piece budget")
        f = self.filler_step()
        for round_atoms in self.atoms_by_round:
            for ab in round_atoms:
                f = f + _atom_step(ab)
        return f

    # -- coefficient access -------------------------------------------------------

    def coefficient(self, k: int) -> Tuple[Mag, int]:
        """(magnitude, sign) of the signed coefficient at index k."""
        level = k.bit_length() - 1
        for b in self.blocks:
            if b.level == level:
                if isinstance(b, FillerBlock):
                    return b.magnitude, 1
                sign = b.atom.coefficient_sign(k)
                if b.scale < 0:
                    sign = -sign
                return b.magnitude, sign
        raise KeyError(f"index {k} outside the cascade spectrum")


def _kernel_step(level: int, magnitude: Mag) -> StepFunction:
    mag = magnitude.to_qs2()
    hi = QS2(1 << level) * mag
    breaks = [Fraction(0), Fraction(1, 1 << (level + 1)),
              Fraction(1, 1 << level), Fraction(1)]
    return StepFunction.from_breaks(breaks, [hi, -hi, QS2_ZERO])


def kernel_sum_step(levels_mags) -> StepFunction:
    """Exact step function of sum_i mag_i * (upper kernel at level n_i).

    On the shell [2^(-n-1), 2^(-n)) the value is the prefix sum of
    mag_m 2^m over levels m < n, minus mag_n 2^n when level n is present;
    the core cell [0, 2^(-max-1)) carries the full sum.
    """
    if not levels_mags:
        return StepFunction.constant(0)
    by_level = {}
    for lv, mag in levels_mags:
        if lv in by_level:
            raise ValueError("duplicate kernel level")
        by_level[lv] = mag.to_qs2() * (1 << lv)
    n_min, n_max = min(by_level), max(by_level)
    from .geometry import _intervals_from_run
    pieces = []
    if n_min > 0:
        for iv in _intervals_from_run(Fraction(1, 1 << n_min), Fraction(1)):
            pieces.append((iv, QS2_ZERO))
    prefix = QS2_ZERO
    for n in range(n_min, n_max + 1):
        term = by_level.get(n)
        val = prefix - term if term is not None else prefix
        pieces.append((DyadicInterval(n + 1, 1), val))
        if term is not None:
            prefix = prefix + term
    pieces.append((DyadicInterval(n_max + 1, 0), prefix))
    return StepFunction(pieces)


def _atom_step(ab: AtomBlock) -> StepFunction:
    pieces = []
    cursor = Fraction(0)
    scale = QS2(ab.scale)
    d = ab.atom.delta
    if d.left > 0:
        from .geometry import _intervals_from_run
        pieces.extend((iv, QS2_ZERO) for iv in _intervals_from_run(Fraction(0), d.left))
    M = ab.atom.M
    base = d.l << (M + 1 - d.K)
    for c in range(1 << ab.atom.t):
        side = ab.atom.minus_cell_side(c)
        lefthalf = DyadicInterval(M + 1, base + 2 * c)
        righthalf = DyadicInterval(M + 1, base + 2 * c + 1)
        vals = {side: -scale, 1 - side: scale}
        pieces.append((lefthalf, vals[0]))
        pieces.append((righthalf, vals[1]))
    if d.right < 1:
        from .geometry import _intervals_from_run
        pieces.extend((iv, QS2_ZERO) for iv in _intervals_from_run(d.right, Fraction(1)))
    return StepFunction(pieces)


def build_cascade(schedule: Schedule) -> CascadePair:
    return CascadePair(schedule)
