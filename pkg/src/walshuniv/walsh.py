"""The Walsh-Paley system: Rademacher products, exact and fast transforms,
block kernels, and the Cauchy-Schwarz prefix majorant.

Conventions frozen here (and oracle-tested): bit b (0-indexed) of the Walsh
index pairs with binary digit b+1 of x, and every Rademacher function is
realized right-continuously as +1 on [2j/2^n, (2j+1)/2^n), -1 on the other
halves.  In Paley order W_n = prod R_{k_i+1} over the set bits k_i of n.

Two transform paths: the exact one (QS2 arithmetic, used by every
verification) and a float path (numpy, benchmarks only).
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .exactnum import QS2, QS2_ZERO, DyadicRational, Mag
from .geometry import (DEFAULT_GRID_BUDGET, DyadicInterval, GridBudgetError,
                       StepFunction, step_from_grid)


def _digit(x: Fraction, n: int) -> int:
    """n-th binary digit (n >= 1) of x in [0,1)."""
    num = x.numerator << n
    return (num // x.denominator) & 1


def rademacher(n: int, x) -> int:
    """R_n(x) for n >= 1: +1 on even, -1 on odd level-n cells."""
    if n < 1:
        raise ValueError("Rademacher index starts at 1")
    if isinstance(x, DyadicRational):
        x = x.as_fraction()
    if not (0 <= x < 1):
        raise ValueError("x outside [0,1)")
    return -1 if _digit(x, n) else 1


def walsh_eval(n: int, x) -> int:
    """W_n(x) in Paley order; W_0 = 1."""
    if n < 0:
        raise ValueError("negative Walsh index")
    if isinstance(x, DyadicRational):
        x = x.as_fraction()
    if not (0 <= x < 1):
        raise ValueError("x outside [0,1)")
    parity = 0
    b = 0
    while n:
        if n & 1:
            parity ^= _digit(x, b + 1)
        n >>= 1
        b += 1
    return -1 if parity else 1


def _bit_reverse_permutation(J: int) -> List[int]:
    out = [0] * (1 << J)
    for i in range(1 << J):
        r = 0
        v = i
        for _ in range(J):
            r = (r << 1) | (v & 1)
            v >>= 1
        out[i] = r
    return out


def _wht_in_place(a: list) -> None:
    n = len(a)
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                x, y = a[j], a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h *= 2


def fwht_analysis(values: Sequence[QS2], budget: int = DEFAULT_GRID_BUDGET) -> List[QS2]:
    """Exact Paley coefficients c_k = integral f*W_k of the step function
    with the given level-J grid values."""
    n = len(values)
    J = n.bit_length() - 1
    if 1 << J != n:
        raise ValueError("length must be a power of two")
    if J > budget:
        raise GridBudgetError(f"J={J} exceeds budget {budget}")
    rev = _bit_reverse_permutation(J)
    a = [values[rev[i]] for i in range(n)]
    _wht_in_place(a)
    scale = Fraction(1, n)
    return [c * scale for c in a]


def fwht_synthesis(coeffs: Sequence[QS2], budget: int = DEFAULT_GRID_BUDGET) -> List[QS2]:
    """Exact inverse: grid values of sum c_k W_k."""
    n = len(coeffs)
    J = n.bit_length() - 1
    if 1 << J != n:
        raise ValueError("length must be a power of two")
    if J > budget:
        raise GridBudgetError(f"J={J} exceeds budget {budget}")
    a = list(coeffs)
    _wht_in_place(a)
    rev = _bit_reverse_permutation(J)
    return [a[rev[i]] for i in range(n)]


def fwht_analysis_float(values: np.ndarray) -> np.ndarray:
    """Float fast path (benchmarks only; verification never uses it)."""
    n = len(values)
    J = n.bit_length() - 1
    if 1 << J != n:
        raise ValueError("length must be a power of two")
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(J):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    a = np.asarray(values, dtype=np.float64)[rev].copy()
    h = 1
    while h < n:
        a = a.reshape(-1, 2 * h)
        x = a[:, :h].copy()
        y = a[:, h:].copy()
        a[:, :h] = x + y
        a[:, h:] = x - y
        a = a.reshape(-1)
        h *= 2
    return a / n


def fwht_synthesis_float(coeffs: np.ndarray) -> np.ndarray:
    """Float inverse: v = WHT(c) read off in bit-reversed order."""
    n = len(coeffs)
    J = n.bit_length() - 1
    if 1 << J != n:
        raise ValueError("length must be a power of two")
    a = np.asarray(coeffs, dtype=np.float64).copy()
    h = 1
    while h < n:
        a = a.reshape(-1, 2 * h)
        x = a[:, :h].copy()
        y = a[:, h:].copy()
        a[:, :h] = x + y
        a[:, h:] = x - y
        a = a.reshape(-1)
        h *= 2
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(J):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return a[rev]


def block_kernel(m: int, variant: str = "upper_half",
                 budget: int = DEFAULT_GRID_BUDGET) -> StepFunction:
    """The closed forms of sum_{k<2^m} W_k ("full") and
    sum_{k=2^m}^{2^(m+1)-1} W_k ("upper_half") as step functions."""
    if m < 1:
        raise ValueError("m must be positive")
    if m + 1 > budget:
        raise GridBudgetError(f"kernel level {m + 1} exceeds budget {budget}")
    v = QS2(1 << m)
    if variant == "full":
        breaks = [Fraction(0), Fraction(1, 1 << m), Fraction(1)]
        values = [v, QS2_ZERO]
    elif variant == "upper_half":
        breaks = [Fraction(0), Fraction(1, 1 << (m + 1)),
                  Fraction(1, 1 << m), Fraction(1)]
        values = [v, -v, QS2_ZERO]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return StepFunction.from_breaks(breaks, values)


def full_kernel_eval(m: int, x: Fraction) -> QS2:
    """Pointwise sum_{k=0}^{2^m-1} W_k(x) without materializing the kernel."""
    if m == 0:
        return QS2(1)
    return QS2(1 << m) if x < Fraction(1, 1 << m) else QS2_ZERO


def upper_kernel_eval(m: int, x: Fraction) -> QS2:
    if x < Fraction(1, 1 << (m + 1)):
        return QS2(1 << m)
    if x < Fraction(1, 1 << m):
        return QS2(-(1 << m))
    return QS2_ZERO


def l1_prefix_majorant(magnitude: Mag, level: int) -> Mag:
    """Right side of the Cauchy-Schwarz bound for any prefix cut inside the
    level-n block with constant coefficient magnitude: b * 2^(n/2)."""
    return magnitude.shift(level)


def dirichlet_step(j: int, budget: int = DEFAULT_GRID_BUDGET) -> StepFunction:
    """sum_{k=0}^{j-1} W_k as a step function (small j; used by oracles)."""
    if j < 1:
        raise ValueError("need j >= 1")
    J = max(1, (j - 1).bit_length())
    if J > budget:
        raise GridBudgetError("Dirichlet kernel too deep")
    vals = []
    for i in range(1 << J):
        x = Fraction(i, 1 << J)
        s = sum(walsh_eval(k, x) for k in range(j))
        vals.append(QS2(s))
    return step_from_grid(vals)
