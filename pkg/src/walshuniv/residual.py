"""Exact weighted integrals of greedy residuals.

After adopting signed blocks nu_1 < ... < nu_j, the residual is

    f - P0 - sum_j f_{nu_j}  (a coarse step core)
    - sum_j (deviation of the chosen block on its exceptional set)
    - (filler kernels, unchosen unsigned blocks, strictness perturbations).

The third line has certified tiny mass and stays an enclosure width.  The
second is structurally deep but exactly integrable: for each coarse cell,
partition points by which chosen exceptional sets contain them (the
deviation there is -2^q gamma per membership) and by the weight's slice
(mu_n or 1); every such region has closed-form measure by the stage
independence, and the products respect consistency when a chosen stage also
participates in a slice condition.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

from .exactnum import QS2, QS2_ONE, QS2_ZERO
from .geometry import DyadicInterval, StepFunction
from .weight import WeightFunction


def _cell_rho(w: WeightFunction, cell: DyadicInterval) -> Dict[int, Fraction]:
    return {st.m: w._stage_rho(st, cell) / cell.measure for st in w.stages}


def _cell_dev(w: WeightFunction, m: int, cell: DyadicInterval) -> QS2:
    """The deviation -2^q gamma of stage m's signed block on its
    exceptional set, within a coarse cell (constant there)."""
    st = w.stages[m - 1]
    for run in st.sa.runs:
        if run.piece.contains_point(cell.left):
            return QS2(-(1 << run.q) * run.gamma)
    raise ValueError("cell outside [0,1)")


def exact_weighted_residual(w: WeightFunction, core: StepFunction,
                            chosen: Sequence[int]) -> QS2:
    """Exact integral of |core + sum of chosen deviations| d mu.

    `core` must be coarse (pieces within the closed-form zone).  Chosen
    deviations act on the stages' exceptional sets; all cross-measures come
    from the independence products.
    """
    chosen = sorted(chosen)
    total = QS2_ZERO
    for iv, v in core.pieces:
        cells = iv.split_to_level(w.query_level_cap) \
            if iv.K < w.query_level_cap else [iv]
        for cell in cells:
            total = total + _cell_contribution(w, cell, v, chosen)
    return total


def _cell_contribution(w: WeightFunction, cell: DyadicInterval, v: QS2,
                       chosen: Sequence[int]) -> QS2:
    rho = _cell_rho(w, cell)
    devs = {m: _cell_dev(w, m, cell) for m in chosen}
    out = QS2_ZERO
    for r in range(len(chosen) + 1):
        for T in combinations(chosen, r):
            val = v
            for m in T:
                val = val + devs[m]
            aval = abs(val)
            if aval == QS2_ZERO:
                continue
            base = cell.measure
            inT = set(T)
            for m in chosen:
                base *= rho[m] if m in inT else (1 - rho[m])
            if base == 0:
                continue
            out = out + aval * _weighted_mass_given(w, rho, inT, chosen, base)
    return out


def _weighted_mass_given(w: WeightFunction, rho: Dict[int, Fraction],
                         inT: set, chosen: Sequence[int],
                         base: Fraction) -> QS2:
    """integral of mu over a region of measure `base` whose membership in
    every chosen stage's exceptional set is fixed by inT; non-chosen stages
    stay free and the weight slices decompose accordingly."""
    chosen_set = set(chosen)
    out = QS2_ZERO

    def consistent_omega(n: int) -> Fraction:
        # probability-like factor of being in all E_k, k >= n, among free
        # stages; zero when a fixed membership contradicts it
        f = Fraction(1)
        for st in w.stages[n - 1:]:
            k = st.m
            if k in chosen_set:
                if k in inT:
                    return Fraction(0)
            else:
                f *= (1 - rho[k])
        return f

    # class Omega_ntilde (mu = 1)
    f0 = consistent_omega(w.ntilde)
    if f0:
        out = out + QS2(base * f0)
    # slices Omega_n \ Omega_{n-1} for n in (ntilde, M_s] (mu = mu_n);
    # requires exclusion by stage n-1 and membership above
    for n in range(w.ntilde + 1, w.M_s + 1):
        k = n - 1
        if k in chosen_set:
            excl = Fraction(1) if k in inT else Fraction(0)
        else:
            excl = rho[k]
        if excl == 0:
            continue
        f = consistent_omega(n)
        if f:
            out = out + w.mu_n(n) * (base * excl * f)
    # outside B: excluded by the top stage (mu = 1)
    k = w.M_s
    if k in chosen_set:
        excl = Fraction(1) if k in inT else Fraction(0)
    else:
        excl = rho[k]
    if excl:
        out = out + QS2(base * excl)
    return out
