"""Closed-form ground-state energies, configurations, and exact counting.

The minimum energy of n points splits every cube's count as evenly as
possible among its 2^d children.  Its value has an exact digit expression:

    L_n = (C_d + 2) n (n-1) / 2  -  C_d * sum_{m=1}^{n-1} gamma(m)

with C_d = (2^{d-1} - 2) / (3 * 2^{d-2}), and the increments D_n = L_{n+1} - L_n
satisfy both a closed form and the self-similar recursion
D_n = 2^{d-2} D_{floor(n / 2^d)} + 2 (n - floor(n / 2^d)).  Everything is
computed in exact integer/rational arithmetic with integrality asserted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic import CountTree, child_coords, child_offsets
from .numtheory import base_level, check_dimension, gamma


class IntegralityError(ArithmeticError):
    """An exactly rational energy failed to be an integer (implementation bug)."""


class CountOverflowError(OverflowError):
    """Exact ground-state count exceeds the configured big-integer budget."""


def _c_constants(d: int) -> tuple[int, int]:
    """(p, q) with C_d = p/q in lowest common form used for integer arithmetic."""
    return 2 ** (d - 1) - 2, 3 * 2 ** (d - 2)


def energy_increment(n: int, d: int) -> int:
    """D_n = (C_d + 2) n - C_d gamma(n), exact; cross-checked via the recursion."""
    check_dimension(d)
    if n < 0:
        raise ValueError("n must be non-negative")
    p, q = _c_constants(d)
    num = (p + 2 * q) * n - p * gamma(n, d)
    if num % q:
        raise IntegralityError(f"D_{n} is not integral for d={d}")
    closed = num // q
    assert closed == _increment_recursive(n, d), (n, d)
    return closed


def _increment_recursive(n: int, d: int, _memo: dict | None = None) -> int:
    if n == 0:
        return 0
    if _memo is None:
        _memo = {}
    if n in _memo:
        return _memo[n]
    m = n >> d
    val = (_increment_recursive(m, d, _memo) << (d - 2)) + 2 * (n - m)
    _memo[n] = val
    return val


def ground_energy(n: int, d: int) -> int:
    """L_n as an exact integer (L_0 = L_1 = 0)."""
    check_dimension(d)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n <= 1:
        return 0
    p, q = _c_constants(d)
    gsum = sum(gamma(m, d) for m in range(1, n))
    num = (p + 2 * q) * n * (n - 1) - 2 * p * gsum
    if num % (2 * q):
        raise IntegralityError(f"L_{n} is not integral for d={d}")
    return num // (2 * q)


@dataclass(frozen=True)
class GroundEnergyTable:
    """Vectorized exact tables L_0..L_N and D_0..D_{N-1} (int64, range-checked)."""

    d: int
    L: np.ndarray
    D: np.ndarray

    @classmethod
    def build(cls, n_max: int, d: int) -> "GroundEnergyTable":
        check_dimension(d)
        p, q = _c_constants(d)
        n = np.arange(n_max, dtype=np.int64)
        g = gamma_vector(n_max, d)
        num = (p + 2 * q) * n - p * g
        if np.any(num % q):
            raise IntegralityError(f"non-integral increment in table for d={d}")
        D = num // q
        L = np.concatenate(([0], np.cumsum(D)))
        # guard against silent int64 wraparound in the cumulative sum
        if n_max >= 2 and L[-1] != ground_energy_upper_check(n_max, d):
            raise OverflowError("ground energy table exceeds int64")
        return cls(d=d, L=L, D=D)


def gamma_vector(n_max: int, d: int) -> np.ndarray:
    """gamma(0..n_max-1) as int64, by vectorized digit extraction."""
    check_dimension(d)
    x = np.arange(n_max, dtype=np.int64)
    g = np.zeros(n_max, dtype=np.int64)
    w = np.int64(1)
    mask = np.int64((1 << d) - 1)
    while x.any():
        g += (x & mask) * w
        x >>= d
        w <<= d - 2
    return g


def ground_energy_upper_check(n: int, d: int) -> int:
    """Exact L_n via big-integer arithmetic, for cross-checking vector tables."""
    p, q = _c_constants(d)
    gs = int(gamma_vector(n, d).sum()) - 0  # gamma(0) = 0 contributes nothing
    num = (p + 2 * q) * n * (n - 1) - 2 * p * gs
    if num % (2 * q):
        raise IntegralityError(f"L_{n} is not integral for d={d}")
    return num // (2 * q)


def min_partition(n: int, d: int) -> CountTree:
    """The canonical minimizer: surplus goes to lexicographically first children."""
    check_dimension(d)
    nodes = {}
    offs = child_offsets(d)
    base = 1 << d

    def fill(level: int, coords, c: int) -> None:
        if c <= 1:
            return
        quot, r = divmod(c, base)
        for j, off in enumerate(offs):
            cc = quot + 1 if j < r else quot
            if cc == 0:
                break
            child = child_coords(coords, off)
            nodes[(level + 1, child)] = cc
            fill(level + 1, child, cc)

    fill(0, (0,) * d, n)
    return CountTree(d, n, nodes)


def is_ground_state(tree: CountTree) -> bool:
    """True iff at every node the 2^d children counts differ pairwise by <= 1."""
    for level, coords, cnt in tree.walk():
        if cnt < 2:
            continue
        kids = tree.children_counts(level, coords)
        if sum(kids) != cnt:
            raise ValueError(f"unresolved or inconsistent node at {(level, coords)}")
        if max(kids) - min(kids) > 1:
            return False
    return True


def count_ground_states(n: int, d: int, max_bits: int = 1 << 22) -> int:
    """Exact number of occupied-base-cell patterns at level h_n.

    Recursion over (count, remaining levels): split count = 2^d q + r, choose
    which r children take q+1, children count independently one level down.
    """
    check_dimension(d)
    if n < 0:
        raise ValueError("n must be non-negative")
    approx_bits = n * d * base_level(n, d) + 1
    if approx_bits > max_bits:
        raise CountOverflowError(
            f"count for n={n}, d={d} needs ~{approx_bits} bits > budget {max_bits}; "
            "use ground_state_weight instead"
        )
    memo: dict = {}

    def b(m: int, lev: int) -> int:
        if m == 0:
            return 1
        if m == 1:
            return 1 << (d * lev)
        if lev == 0:
            return 0
        key = (m, lev)
        if key not in memo:
            q, r = divmod(m, 1 << d)
            memo[key] = (
                math.comb(1 << d, r) * b(q + 1, lev - 1) ** r * b(q, lev - 1) ** ((1 << d) - r)
            )
        return memo[key]

    return b(n, base_level(n, d))


def ground_state_weight_exact(n: int, d: int) -> Fraction:
    """b_n 2^{-n d h_n} as an exact rational (practical for moderate n)."""
    check_dimension(d)
    memo: dict[int, Fraction] = {0: Fraction(1), 1: Fraction(1)}

    def w(m: int) -> Fraction:
        if m not in memo:
            q, r = divmod(m, 1 << d)
            memo[m] = (
                Fraction(math.comb(1 << d, r), 1 << (m * d))
                * w(q + 1) ** r
                * w(q) ** ((1 << d) - r)
            )
        return memo[m]

    return w(n)


def log_ground_weights(n_max: int, d: int) -> np.ndarray:
    """log(b_m 2^{-m d h_m}) for m = 0..n_max, level-free recursion, float64."""
    check_dimension(d)
    two_d = 1 << d
    log_comb = [math.log(math.comb(two_d, r)) for r in range(two_d)]
    out = np.zeros(n_max + 1)
    dln2 = d * math.log(2)
    for m in range(2, n_max + 1):
        q, r = divmod(m, two_d)
        out[m] = log_comb[r] - m * dln2 + r * out[q + 1] + (two_d - r) * out[q]
    return out


def ground_state_weight(n: int, d: int):
    """log-domain b_n 2^{-n d h_n}; see log_ground_weights for the recursion."""
    from .partition_function import LogWeight

    return LogWeight(float(log_ground_weights(n, d)[n]))


def log_factorials(n_max: int) -> np.ndarray:
    """log m! for m = 0..n_max; extended-precision cumulative sum of logs."""
    if n_max == 0:
        return np.zeros(1)
    logs = np.log(np.arange(1, n_max + 1, dtype=np.longdouble))
    return np.concatenate(([0.0], np.cumsum(logs))).astype(np.float64)


def log_factorial(n: int) -> float:
    if n <= 10_000:
        return float(log_factorials(n)[n])
    return math.lgamma(n + 1)


def log_z_ground(n: int, beta: float, d: int):
    """log of the ground-state contribution e^{-beta L_n} n! b_n 2^{-n d h_n}."""
    from .partition_function import LogWeight

    check_dimension(d)
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if n <= 1:
        return LogWeight(0.0)
    gsw = float(log_ground_weights(n, d)[n])
    return LogWeight(-beta * ground_energy(n, d) + log_factorial(n) + gsw)


def sample_ground_state(n: int, d: int, rng: np.random.Generator) -> CountTree:
    """Uniform draw over the ground states of n points (as a resolved tree).

    At each node the surplus-r subset of children is chosen uniformly at
    random; independence across nodes gives the uniform law over patterns.
    """
    check_dimension(d)
    nodes = {}
    offs = child_offsets(d)
    base = 1 << d

    def fill(level: int, coords, c: int) -> None:
        if c <= 1:
            return
        quot, r = divmod(c, base)
        counts = [quot] * base
        if r:
            for j in rng.choice(base, size=r, replace=False):
                counts[j] += 1
        for j, off in enumerate(offs):
            if counts[j] == 0:
                continue
            child = child_coords(coords, off)
            nodes[(level + 1, child)] = counts[j]
            fill(level + 1, child, counts[j])

    fill(0, (0,) * d, n)
    return CountTree(d, n, nodes)
