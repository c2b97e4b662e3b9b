"""Small exact-arithmetic helpers."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .points import to_fraction

Real = Fraction | float

# intermediate products above this switch numpy arrays to Python ints
_SAFE = 1 << 62


def frac(value) -> Fraction:
    return to_fraction(value)


def log2(q: Real) -> Real:
    """Base-2 logarithm, exact when ``q`` is a power of two."""
    if isinstance(q, Fraction):
        if q <= 0:
            raise ValueError("log2 of a non-positive number")
        num, den = q.numerator, q.denominator
        if num & (num - 1) == 0 and den & (den - 1) == 0:
            return Fraction(num.bit_length() - den.bit_length())
        return math.log2(num) - math.log2(den)
    return math.log2(q)


def ceil(x: Real) -> int:
    return math.ceil(x)


def ceil_log2(q: Fraction) -> int:
    """Smallest ``L >= 0`` with ``2**L >= q``."""
    L = 0
    while Fraction(2) ** L < q:
        L += 1
    return L


def to_rational(x: Real, max_denominator: int = 10**6) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x).limit_denominator(max_denominator)


def fmt(x) -> str:
    """Stable text form used in reports: ``a/b`` for rationals, repr for floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def exact_array(values: np.ndarray, *scales: int) -> np.ndarray:
    """``values`` as int64 if multiplying by ``scales`` cannot overflow, else as Python ints."""
    peak = int(np.abs(values).max()) if values.size else 0
    for s in scales:
        peak *= max(1, abs(int(s)))
    if peak < _SAFE:
        return values.astype(np.int64)
    return values.astype(object)
