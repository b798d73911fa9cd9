from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walshuniv.exactnum import QS2, Mag, half_power
from walshuniv.geometry import StepFunction, step_from_grid
from walshuniv.walsh import (block_kernel, dirichlet_step, fwht_analysis,
                             fwht_analysis_float, fwht_synthesis,
                             fwht_synthesis_float, l1_prefix_majorant,
                             rademacher, walsh_eval)


def test_rademacher_examples():
    assert rademacher(1, Fraction(1, 4)) == 1      # sign(sin(pi/2)) > 0
    assert rademacher(2, Fraction(3, 8)) == -1     # sign(sin(3pi/2)) < 0
    assert rademacher(3, Fraction(0)) == 1         # right-continuous at 0


def test_rademacher_matches_sin_sign():
    import math
    for n in (1, 2, 3):
        for num in range(0, 64):
            x = Fraction(num, 64) + Fraction(1, 128)  # stay off the zeros
            want = 1 if math.sin((2 ** n) * math.pi * float(x)) > 0 else -1
            assert rademacher(n, x) == want


def test_walsh_eval_examples():
    assert walsh_eval(0, Fraction(1, 3) if False else Fraction(1, 4)) == 1
    # W_3 = R_2 R_1; at x=1/8 digits are 0,0 -> +1
    assert walsh_eval(3, Fraction(1, 8)) == \
        rademacher(2, Fraction(1, 8)) * rademacher(1, Fraction(1, 8)) == 1
    assert walsh_eval(2, Fraction(3, 8)) == rademacher(2, Fraction(3, 8)) == -1


def test_walsh_product_of_rademachers():
    # W_n = prod over set bits k_i of R_{k_i+1}
    for n in range(1, 32):
        bits = [b for b in range(6) if (n >> b) & 1]
        for num in range(32):
            x = Fraction(num, 32)
            prod = 1
            for b in bits:
                prod *= rademacher(b + 1, x)
            assert walsh_eval(n, x) == prod


def test_fwht_analysis_direct_integration():
    # chi_[0,1/2) at J=1: c_0 = c_1 = 1/2
    c = fwht_analysis([QS2(1), QS2(0)])
    assert c == [QS2(Fraction(1, 2)), QS2(Fraction(1, 2))]
    # constant 1: unit coefficient at 0
    c = fwht_analysis([QS2(1)] * 8)
    assert c[0] == QS2(1) and all(v == QS2(0) for v in c[1:])


def test_fwht_matches_brute_force_integration():
    J = 4
    n = 1 << J
    vals = [QS2(Fraction((7 * i * i + 3) % 11 - 5, 3)) for i in range(n)]
    coeffs = fwht_analysis(vals)
    for k in range(n):
        acc = QS2(0)
        for i in range(n):
            acc = acc + vals[i] * walsh_eval(k, Fraction(i, n))
        assert coeffs[k] == acc * Fraction(1, n)


@given(st.lists(st.builds(Fraction, st.integers(-50, 50), st.integers(1, 8)),
                min_size=8, max_size=8))
def test_fwht_roundtrip(vals):
    v = [QS2(f) for f in vals]
    assert fwht_synthesis(fwht_analysis(v)) == v


def test_orthonormality_grid():
    J = 5
    n = 1 << J
    for k in (0, 1, 5, 17, 31):
        grid = [QS2(walsh_eval(k, Fraction(i, n))) for i in range(n)]
        c = fwht_analysis(grid)
        for j in range(n):
            assert c[j] == (QS2(1) if j == k else QS2(0))


def test_bit_digit_pairing():
    # coefficient bit b of the index pairs with dyadic digit b+1 of x
    J = 6
    n = 1 << J
    for k in (1, 2, 4, 8, 38):
        for i in (0, 7, 33, 63):
            x = Fraction(i, n)
            parity = 0
            for b in range(J):
                if (k >> b) & 1 and (i >> (J - 1 - b)) & 1:
                    parity ^= 1
            assert walsh_eval(k, x) == (-1 if parity else 1)


def test_block_kernels_match_summation():
    for m in range(1, 7):
        full = block_kernel(m, "full")
        upper = block_kernel(m, "upper_half")
        n = 1 << (m + 1)
        for i in range(n):
            x = Fraction(i, n)
            s_full = sum(walsh_eval(k, x) for k in range(1 << m))
            s_up = sum(walsh_eval(k, x) for k in range(1 << m, 1 << (m + 1)))
            assert full.value_at(x) == QS2(s_full)
            assert upper.value_at(x) == QS2(s_up)


def test_block_kernel_values():
    k = block_kernel(2, "full")
    assert k.value_at(Fraction(0)) == QS2(4)
    assert k.value_at(Fraction(1, 4)) == QS2(0)
    u = block_kernel(2, "upper_half")
    assert u.value_at(Fraction(0)) == QS2(4)
    assert u.value_at(Fraction(1, 8)) == QS2(-4)
    assert u.value_at(Fraction(1, 4)) == QS2(0)


def test_upper_kernel_l1_norm_is_one():
    for m in range(1, 11):
        assert block_kernel(m, "upper_half").integrate_over() == QS2(1)


def test_prefix_majorant():
    # level n block, constant magnitude b: majorant b * 2^(n/2)
    maj = l1_prefix_majorant(Mag(Fraction(1, 4)), 3)
    assert maj.to_qs2() == QS2(0, Fraction(1, 2))  # sqrt2/2
    # dense oracle: actual prefix L1 never exceeds the majorant
    n_level = 4
    b = Fraction(1, 4)
    maj2 = l1_prefix_majorant(Mag(b), n_level).to_qs2()
    J = n_level + 1
    size = 1 << J
    for M in (16, 19, 23, 27, 31):
        vals = []
        for i in range(size):
            x = Fraction(i, size)
            s = sum(walsh_eval(k, x) for k in range(1 << n_level, M + 1))
            vals.append(QS2(Fraction(s) * b))
        l1 = step_from_grid(vals).integrate_over()
        assert l1 <= maj2


def test_dirichlet_step():
    d = dirichlet_step(3)
    for i in range(4):
        x = Fraction(i, 4)
        assert d.value_at(x) == QS2(sum(walsh_eval(k, x) for k in range(3)))


def test_float_roundtrip_small():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(1 << 10)
    c = fwht_analysis_float(v)
    back = fwht_synthesis_float(c)
    assert np.max(np.abs(back - v)) < 1e-12


def test_float_matches_exact():
    vals = [QS2(Fraction(i % 5 - 2, 2)) for i in range(16)]
    exact = fwht_analysis(vals)
    approx = fwht_analysis_float(np.array([v.to_float() for v in vals]))
    for e, a in zip(exact, approx):
        assert abs(e.to_float() - a) < 1e-12
