"""Exact arithmetic on numbers of the form a + b*sqrt(r) with rational a, b, r.

Strict inequalities against such numbers cannot be decided reliably in
floating point, so comparisons here square out the radical and stay in
``fractions.Fraction`` throughout.  r must be a non-negative rational.
"""

from __future__ import annotations

import math
from fractions import Fraction


def root_value(a: Fraction, b: Fraction, r) -> float:
    """Float value of a + b*sqrt(r)."""
    return float(a) + float(b) * math.sqrt(float(r))


def root_sign(a: Fraction, b: Fraction, r) -> int:
    """Sign (-1, 0, +1) of a + b*sqrt(r), decided exactly."""
    a = Fraction(a)
    b = Fraction(b)
    r = Fraction(r)
    if r < 0:
        raise ValueError("radicand must be non-negative")
    if b == 0:
        return (a > 0) - (a < 0)
    # compare b*sqrt(r) against -a
    lhs_sq = b * b * r
    rhs = -a
    if b > 0:
        # a + b*sqrt(r) > 0  <=>  b*sqrt(r) > -a
        if rhs < 0:
            return 1
        if lhs_sq > rhs * rhs:
            return 1
        if lhs_sq < rhs * rhs:
            return -1
        return 0
    # b < 0: a + b*sqrt(r) > 0  <=>  |b|*sqrt(r) < a
    if a <= 0:
        return -1 if (a < 0 or r > 0) else 0
    if lhs_sq < a * a:
        return 1
    if lhs_sq > a * a:
        return -1
    return 0


def root_lt(a1, b1, a2, b2, r) -> bool:
    """Exact test of a1 + b1*sqrt(r) < a2 + b2*sqrt(r)."""
    return root_sign(Fraction(a1) - Fraction(a2), Fraction(b1) - Fraction(b2), r) < 0


def root_leq(a1, b1, a2, b2, r) -> bool:
    """Exact test of a1 + b1*sqrt(r) <= a2 + b2*sqrt(r)."""
    return root_sign(Fraction(a1) - Fraction(a2), Fraction(b1) - Fraction(b2), r) <= 0


def root_abs_leq(a, b, bound_a, bound_b, r) -> bool:
    """Exact test of |a + b*sqrt(r)| <= bound_a + bound_b*sqrt(r)."""
    return root_leq(a, b, bound_a, bound_b, r) and root_leq(-Fraction(a), -Fraction(b), bound_a, bound_b, r)
