from fractions import Fraction

import pytest

from walshuniv.cascade import ScheduleInfeasible
from walshuniv.exactnum import QS2
from walshuniv.geometry import StepFunction
from walshuniv.stepapprox import (_WholeE, build_step_approx,
                                  verify_step_approx)


def two_piece(g=Fraction(1, 1024)):
    return StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(g), QS2(-g)])


def four_piece(g=Fraction(1, 1024)):
    return StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)],
        [QS2(g), QS2(-g), QS2(2 * g), QS2(-2 * g)])


def test_refinement_rule():
    # f = 1 with eps = 1/2 needs 3|gamma||piece| < 1/16 -> 64 pieces
    f = StepFunction.constant(1)
    try:
        build_step_approx(f, Fraction(1, 2), 1)
        raised = False
    except ScheduleInfeasible:
        raised = True
    # 64 pieces with the chained q assignment is never measure-feasible,
    # and must be reported as infeasible rather than built badly
    assert raised


def test_two_piece_paper_mode():
    sa = build_step_approx(two_piece(), Fraction(1, 2), 1)
    assert [r.q for r in sa.runs] == [2, 1]
    assert sa.e_measure() > Fraction(1, 2)
    rep = verify_step_approx(sa, seed=11, n_subsets=12)
    assert rep.passed, rep.summary()


def test_four_piece_paper_mode():
    sa = build_step_approx(four_piece(), Fraction(1, 2), 1)
    assert [r.q for r in sa.runs] == [2, 1, 1, 1]
    assert sa.e_measure() > Fraction(1, 2)
    rep = verify_step_approx(sa, seed=13, n_subsets=12)
    assert rep.passed, rep.summary()


def test_chained_strict_decrease():
    sa = build_step_approx(four_piece(), Fraction(1, 2), 1)
    mags = sa.magnitudes()
    for a, b in zip(mags, mags[1:]):
        assert not (a < b)
    # strict drop across piece boundaries
    edge = 0
    for run in sa.runs[:-1]:
        edge += len(run.pair.blocks)
        assert mags[edge] < mags[edge - 1]


def test_error_over_E_small():
    sa = build_step_approx(two_piece(), Fraction(1, 2), 1)
    err = sa.approx_error_core() + sa.perturb_tail_upper().to_qs2()
    assert err < QS2(Fraction(1, 2))
    # and the unweighted unsigned prefix bound
    assert sa.p_prefix_max_upper() < QS2(Fraction(1, 2))


def test_toy_mode_chain():
    f = StepFunction.from_breaks(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [QS2(3), QS2(-1)])
    sa = build_step_approx(f, None, 1, mode="toy", q_default=3)
    # second chained piece cannot recurse as deep (fragment growth); the
    # builder records the achieved depth honestly
    assert [r.q for r in sa.runs] == [3, 2]
    assert sa.e_measure() == 1 - Fraction(1, 16) - Fraction(1, 8)
    rep = verify_step_approx(sa, seed=2, n_subsets=6)
    assert rep.passed, rep.summary()
    # H core equals f off the exceptional set up to fillers: spot check deep
    # inside a piece, away from kernels
    x = Fraction(5, 16)
    got = sa.h_core_eval(x)
    fillers = sa.filler_step_total().value_at(x)
    assert got - fillers in (QS2(3), QS2(-(2 ** 3 - 1) * 3))


def test_index_ranges_chain():
    sa = build_step_approx(two_piece(), Fraction(1, 2), 1)
    ends = [r.pair.schedule.end_level for r in sa.runs]
    starts = [r.pair.schedule.n0 for r in sa.runs]
    assert starts[0] == 1
    assert starts[1] == ends[0] + 1
