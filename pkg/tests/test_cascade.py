from fractions import Fraction

import pytest

from walshuniv.cascade import (CascadePair, ScheduleInfeasible, build_cascade,
                               choose_schedule)
from walshuniv.cascade_verify import verify_cascade
from walshuniv.exactnum import QS2, Mag
from walshuniv.geometry import DyadicInterval, DyadicSet, StepFunction
from walshuniv.walsh import fwht_analysis, walsh_eval


def minimal_scan_oracle(n0, K, eps, gamma, K1):
    """Independent re-derivation of the round-1 minimal levels."""
    N1 = 1 << (K1 - K + 1)
    levels = []
    prev = n0 - 1
    lv = max(prev + 1, K1 + 3)
    if (lv - K1 - 1) % 2:
        lv += 1
    import math
    for i in range(N1):
        while True:
            b = (lv - prev) * abs(gamma) * 2 ** (-(lv + K1 + 1) / 2)
            c = 2 * abs(gamma) * 2 ** (-(lv + 1) / 2)
            if b < eps / (4 * N1) and c < eps / 2:
                break
            lv += 2
        levels.append(lv)
        prev = lv
        lv += 2
    return levels


def test_spec_schedule_example():
    # eps=9/10, gamma=1, Delta=[0,1/2), q=1 -> K1=2, N1=4, levels (13,15,17,19)
    s = choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10), Fraction(1), 1)
    assert s.split_level - 1 == 2          # K1 = 2
    assert s.counts == [4]
    assert s.levels == [[13, 15, 17, 19]]
    assert s.levels[0] == minimal_scan_oracle(1, 1, 0.9, 1, 2)


def test_spec_schedule_eps_half():
    # same but eps=1/2 -> K1=4 (first K' > 1 with 2^(-(K'+1)/2) < 1/4)
    s = choose_schedule(1, DyadicInterval(1, 0), Fraction(1, 2), Fraction(1), 1)
    assert s.split_level - 1 == 4


def test_infeasibility_detection_q2():
    with pytest.raises(ScheduleInfeasible) as ei:
        choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10), Fraction(1), 2)
    assert ei.value.round_nu == 2
    assert ei.value.estimated_count > 1 << 16


def test_toy_injected_levels():
    s = choose_schedule(1, DyadicInterval(0, 0), None, Fraction(1), 1,
                        mode="toy", toy_levels=[[5, 7]])
    assert s.mode == "toy" and s.counts == [2]
    pair = build_cascade(s)
    rep = verify_cascade(pair)
    assert rep.passed


def test_toy_injected_parity_rejected():
    with pytest.raises(ValueError):
        choose_schedule(1, DyadicInterval(1, 0), None, Fraction(1), 1,
                        mode="toy", toy_levels=[[5, 7]])


def test_paper_q1_pointwise_values():
    # q=1 cascade on Delta=[0,1/2), gamma=1: step part takes values {-1,+1}
    # on Delta, 0 outside, with |{=-1}| = 1/4
    s = choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10), Fraction(1), 1)
    pair = build_cascade(s)
    assert pair.etilde_measure() == Fraction(1, 4)
    vals = set()
    n = 1 << 8
    for i in range(n):
        x = Fraction(i, n)
        v = pair.htilde_eval_by_sets(x)
        vals.add(v)
        assert v == pair.htilde_eval(x)
    assert vals == {QS2(1), QS2(-1), QS2(0)}


def test_paper_q1_statements_pass():
    for gamma, delta in [(Fraction(1), DyadicInterval(1, 0)),
                         (Fraction(-2), DyadicInterval(2, 1)),
                         (Fraction(1, 3), DyadicInterval(0, 0))]:
        s = choose_schedule(1, delta, Fraction(9, 10), gamma, 1)
        pair = build_cascade(s)
        rep = verify_cascade(pair, seed=7)
        assert rep.passed, rep.summary()


def test_toy_q2_structure():
    # toy q=2: value set {-3 gamma, gamma, 0}, |E-tilde_2| = |Delta|/4
    gamma = Fraction(2)
    s = choose_schedule(1, DyadicInterval(1, 0), None, gamma, 2, mode="toy")
    pair = build_cascade(s)
    assert pair.etilde_measure() == Fraction(1, 8)   # |Delta|/4
    rep = verify_cascade(pair, seed=3)
    assert rep.passed, rep.summary()
    n = 1 << 7
    vals = {pair.htilde_eval_by_sets(Fraction(i, n)) for i in range(n)}
    assert vals == {QS2(-6), QS2(2), QS2(0)}


def test_toy_q3_structure():
    s = choose_schedule(1, DyadicInterval(2, 1), None, Fraction(1), 3, mode="toy")
    pair = build_cascade(s)
    assert pair.etilde_measure() == Fraction(1, 4) / 8
    rep = verify_cascade(pair, seed=5)
    assert rep.passed, rep.summary()


def test_filler_magnitude_formula():
    # filler block magnitudes match (K_i, anchor) formula
    s = choose_schedule(1, DyadicInterval(1, 0), Fraction(9, 10), Fraction(1), 1)
    pair = build_cascade(s)
    from walshuniv.cascade import FillerBlock
    K1 = s.split_level - 1
    for b in pair.blocks:
        if isinstance(b, FillerBlock):
            cut = next(lv for lv in s.levels[0] if lv > b.level)
            assert b.magnitude == Mag(1, -(cut + K1 + 1))


def test_dense_small_toy_matches_fwht():
    # a tiny toy cascade expanded densely must have per-level flat blocks
    s = choose_schedule(1, DyadicInterval(0, 0), None, Fraction(1), 1,
                        mode="toy", toy_levels=[[3, 5]])
    pair = build_cascade(s)
    h = pair.h_step()
    J = 6
    coeffs = fwht_analysis(h.grid_values(J))
    for k in range(1 << J):
        level = k.bit_length() - 1
        if 2 <= k < (1 << 6):
            mag, sign = pair.coefficient(k)
            assert coeffs[k] == mag.to_qs2() * sign
        else:
            assert coeffs[k] == QS2(0)


def test_p_step_is_kernel_sum():
    s = choose_schedule(1, DyadicInterval(0, 0), None, Fraction(1), 1,
                        mode="toy", toy_levels=[[3, 5]])
    pair = build_cascade(s)
    p = pair.p_step()
    J = 6
    coeffs = fwht_analysis(p.grid_values(J))
    for k in range(1 << J):
        if 2 <= k:
            mag, _ = pair.coefficient(k)
            assert coeffs[k] == mag.to_qs2()
        else:
            assert coeffs[k] == QS2(0)


def test_decomposition_identity_dense():
    # H = step part + fillers pointwise, on the full grid
    s = choose_schedule(2, DyadicInterval(1, 1), None, Fraction(-1), 2, mode="toy")
    pair = build_cascade(s)
    n = 1 << (s.end_level + 1)
    for i in range(0, n, 3):
        x = Fraction(i, n)
        assert pair.h_eval(x) == \
            pair.htilde_eval_by_sets(x) + pair.fillers_eval(x)
