"""Exact base-2^d digit arithmetic for the energy bookkeeping.

Everything here is integer/rational and exact: the digit expansion of a
particle count in base 2^d, the digit-weighted sum that controls the
sub-leading ground-state energy term, and the smallest tree depth at
which a count fits one-per-cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

# The model is defined for d >= 3; above d = 16 a node would have more than
# 65536 children and no table in this package stays practical.
D_MIN = 3
D_MAX = 16


class DimensionError(ValueError):
    """Dimension outside the supported range [3, 16]."""


def check_dimension(d: int) -> int:
    if not isinstance(d, int) or isinstance(d, bool):
        raise DimensionError(f"dimension must be an integer, got {d!r}")
    if not D_MIN <= d <= D_MAX:
        raise DimensionError(f"dimension must satisfy {D_MIN} <= d <= {D_MAX}, got {d}")
    return d


@dataclass(frozen=True)
class DigitVector:
    """Digits of a non-negative integer in base 2^d, least significant first.

    Invariants: every digit lies in [0, 2^d - 1], the top digit is nonzero
    unless the value is zero (empty digit tuple), and the digits reconstruct
    the value exactly.
    """

    digits: tuple[int, ...]
    base: int

    def __post_init__(self):
        if self.base < 2 ** D_MIN:
            raise DimensionError(f"base must be at least {2 ** D_MIN}, got {self.base}")
        for c in self.digits:
            if not 0 <= c < self.base:
                raise ValueError(f"digit {c} out of range for base {self.base}")
        if self.digits and self.digits[-1] == 0:
            raise ValueError("top digit must be nonzero")

    def value(self) -> int:
        total = 0
        for c in reversed(self.digits):
            total = total * self.base + c
        return total

    def __len__(self) -> int:
        return len(self.digits)


@dataclass(frozen=True)
class DimConstant:
    """Dimension d together with the exact rational constant (2^{d-1}-2)/(3*2^{d-2})."""

    d: int
    c_d: Fraction

    @classmethod
    def for_dimension(cls, d: int) -> "DimConstant":
        check_dimension(d)
        return cls(d=d, c_d=Fraction(2 ** (d - 1) - 2, 3 * 2 ** (d - 2)))


def digits_base(n: int, d: int) -> DigitVector:
    """Expand n >= 0 in base 2^d; n = 0 gives the empty digit vector."""
    check_dimension(d)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    base = 1 << d
    digits = []
    while n > 0:
        n, c = divmod(n, base)
        digits.append(c)
    return DigitVector(digits=tuple(digits), base=base)


def gamma(n: int, d: int) -> int:
    """Digit-weighted sum: sum of c_i * 2^{i(d-2)} over the base-2^d digits of n.

    gamma(0) = 0 by the empty-sum convention.
    """
    check_dimension(d)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    base_mask = (1 << d) - 1
    weight = 1 << (d - 2)
    total = 0
    w = 1
    while n > 0:
        total += (n & base_mask) * w
        n >>= d
        w *= weight
    return total


def base_level(n: int, d: int) -> int:
    """Smallest h with 2^{dh} >= n, by exact integer comparison.

    This is the shallowest depth at which n points fit one per cell.
    base_level(0) = 0 by convention.
    """
    check_dimension(d)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n <= 1:
        return 0
    h = 0
    cap = 1
    while cap < n:
        h += 1
        cap <<= d
    return h
