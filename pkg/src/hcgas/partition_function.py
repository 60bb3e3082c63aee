"""Exact log-domain partition-function evaluation by dynamic programming.

The normalizing integral factorizes over the dyadic tree: conditioning on the
level-1 box counts (n_1, ..., n_{2^d}) and using that the systems inside the
boxes are independent copies at inverse temperature 2^{d-2} beta,

    Z(m, beta) = m! e^{-beta m^2} (f ** 2^d)(m),
    f(j)       = e^{beta j^2} Z(j, 2^{d-2} beta) 2^{-dj} / j!,

where ** is t-fold sequence convolution.  Tables are filled from a truncation
depth K upward; at depth K the unknown Z(. , beta_{K+1}) is replaced by its
ground-state contribution, which is a rigorous lower bound and becomes exact
as the effective inverse temperature blows up.  The DP value therefore equals
the contribution of configurations that are ground states beyond level K, so
deepening K can only increase it.

Numerics.  Stored logarithms would span e^{-beta_k L_n} with beta_k = 2^{(d-2)k}
beta, and float cancellation at deep levels would destroy the 1e-9 bracket
accuracy.  Every table entry is therefore split into an exact integer
reference plus a moderate float:

    log f_k(j)      = -beta 2^{(d-2)k} A(j)      + Ff_k(j),
    log (f_k**t)(m) = -beta 2^{(d-2)k} T_t(m)    + Fg_{k,t}(m),

with A(j) = 2^{d-2} L_j - j^2 (the factorials cancel against the ground
weight) and T_t the t-fold min-plus power of A.  Min-plus consistency makes
every convolution defect A(j) + T_{t-1}(m-j) - T_t(m) a non-negative exact
integer, so all float arithmetic happens on moderately sized numbers and the
huge reference parts cancel symbolically in the read-off

    log Z(m, beta_k) = -beta_k L_m + log m! + log GSW(m) + R_k(m),

where R_k >= 0 is the stored deviation from the ground-state contribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .groundstate import GroundEnergyTable, log_factorials, log_ground_weights
from .numtheory import base_level, check_dimension

LN2 = math.log(2.0)
NEG_INF = float("-inf")

DEFAULT_TOL = 1e-10
MAX_DEPTH = 64
TABLES_CACHE_VERSION = 1


class MemoryBudgetError(MemoryError):
    """Requested tables exceed the memory budget; reports the required size."""


class ConvergenceError(RuntimeError):
    """Depth doubling failed to stabilize log Z within the allowed depth."""


@dataclass(frozen=True, order=True)
class LogWeight:
    """A signless non-negative quantity stored as its natural log (-inf is zero).

    Multiplication adds logs; addition is max-shifted log-sum-exp.
    """

    value: float

    @classmethod
    def zero(cls) -> "LogWeight":
        return cls(NEG_INF)

    @classmethod
    def one(cls) -> "LogWeight":
        return cls(0.0)

    @classmethod
    def from_linear(cls, x: float) -> "LogWeight":
        if x < 0:
            raise ValueError("LogWeight represents non-negative quantities only")
        return cls(math.log(x) if x > 0 else NEG_INF)

    def to_linear(self) -> float:
        return math.exp(self.value)

    def __mul__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(self.value + other.value)

    def __truediv__(self, other: "LogWeight") -> "LogWeight":
        if other.value == NEG_INF:
            raise ZeroDivisionError("division by zero LogWeight")
        return LogWeight(self.value - other.value)

    def __add__(self, other: "LogWeight") -> "LogWeight":
        a, b = self.value, other.value
        if a == NEG_INF:
            return LogWeight(b)
        if b == NEG_INF:
            return LogWeight(a)
        hi, lo = (a, b) if a >= b else (b, a)
        return LogWeight(hi + math.log1p(math.exp(lo - hi)))

    def __pow__(self, k: int) -> "LogWeight":
        return LogWeight(k * self.value)


# -- integer references, cached per dimension --------------------------------

_REF_CACHE: dict = {}


def _int_refs(d: int, n: int) -> dict:
    """Ground-energy array L, reference A, and min-plus powers T_1..T_{2^d}.

    Grown on demand and cached per dimension; beta- and depth-independent.
    """
    cached = _REF_CACHE.get(d)
    if cached is not None and cached["n"] >= n:
        return cached
    cells = 1 << d
    L = GroundEnergyTable.build(n, d).L  # L_0..L_n, int64
    m = np.arange(n + 1, dtype=np.int64)
    A = (L << (d - 2)) - m * m
    T = [None, A]
    for t in range(2, cells + 1):
        prev_r = T[t - 1][::-1]
        cur = np.empty(n + 1, dtype=np.int64)
        for i in range(n + 1):
            cur[i] = (A[: i + 1] + prev_r[n - i :]).min()
        T.append(cur)
    # Bellman identity: the full min-plus power recovers the ground energy.
    if not np.array_equal(T[cells], L - m * m):
        raise AssertionError("min-plus reference does not match ground energies")
    refs = {"n": n, "L": L, "A": A, "T": T}
    _REF_CACHE[d] = refs
    return refs


def _log_conv(bscale: float, A, t_prev, t_cur, ff, fg_prev) -> np.ndarray:
    """One recentered log-domain convolution step (float parts only)."""
    n = len(ff) - 1
    out = np.empty(n + 1)
    t_prev_r = t_prev[::-1]
    fg_prev_r = fg_prev[::-1]
    for m in range(n + 1):
        start = n - m
        defect = (A[: m + 1] + t_prev_r[start:] - t_cur[m]).astype(np.float64)
        x = ff[: m + 1] + fg_prev_r[start:] - bscale * defect
        xm = x.max()
        np.exp(x - xm, out=x)
        out[m] = xm + math.log(x.sum())
    return out


class LevelTables:
    """Per-level DP arrays shared by Z evaluation and the exact sampler.

    Level k holds the float parts Ff (of f_k) and Fg[t] (of the partial
    convolution powers f_k**t for t = 1..2^d), plus the deviation R_k of
    log Z(., beta_k) from its ground-state contribution.  beta_k = 2^{(d-2)k}
    beta; the seed deviation R_{K+1} is identically zero.
    """

    def __init__(
        self,
        n: int,
        beta: float,
        d: int,
        depth_pad: int = 4,
        memory_budget: int = 2 << 30,
    ):
        check_dimension(d)
        if n < 0:
            raise ValueError("n must be non-negative")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        if depth_pad < 0:
            raise ValueError("depth_pad must be non-negative")
        self.n = n
        self.beta = float(beta)
        self.d = d
        self.depth_pad = depth_pad
        self.K = base_level(max(n, 2), d) + depth_pad
        cells = 1 << d
        need = (self.K + 1) * (cells + 2) * (n + 1) * 8
        if need > memory_budget:
            raise MemoryBudgetError(
                f"tables for n={n}, d={d}, K={self.K} need ~{need} bytes "
                f"> budget {memory_budget}"
            )
        refs = _int_refs(d, max(n, 2))
        self._A = refs["A"][: n + 1]
        self._T = [None] + [refs["T"][t][: n + 1] for t in range(1, cells + 1)]
        self.L = refs["L"][: n + 1]
        self.log_gsw = log_ground_weights(n, d)
        self.log_fact = log_factorials(n)
        dln2 = d * LN2
        marr = np.arange(n + 1, dtype=np.float64)

        self.Ff = [None] * (self.K + 1)
        self.Fg = [None] * (self.K + 1)
        self.R = [None] * (self.K + 2)
        self.R[self.K + 1] = np.zeros(n + 1)
        for k in range(self.K, -1, -1):
            bscale = self.beta * 2.0 ** ((d - 2) * k)
            ff = self.log_gsw + self.R[k + 1] - dln2 * marr
            fg = [None, ff]
            for t in range(2, cells + 1):
                fg.append(
                    _log_conv(bscale, self._A, self._T[t - 1], self._T[t], ff, fg[t - 1])
                )
            r_k = fg[cells] - self.log_gsw
            if r_k.min() < -1e-6:
                raise AssertionError(
                    f"deviation from ground went negative at level {k}: {r_k.min()}"
                )
            self.Ff[k] = ff
            self.Fg[k] = fg
            self.R[k] = r_k
        # shared distribution caches for the sampler (draw-independent)
        self._child_cum_cache: dict = {}

    # -- read-off ------------------------------------------------------------

    def beta_at(self, k: int) -> float:
        return self.beta * 2.0 ** ((self.d - 2) * k)

    def log_z(self, m: int, k: int = 0) -> float:
        """log Z(m, beta_k) for any m <= n and level k <= K + 1."""
        if not 0 <= m <= self.n:
            raise ValueError(f"m={m} outside table range 0..{self.n}")
        if not 0 <= k <= self.K + 1:
            raise ValueError(f"level k={k} outside 0..{self.K + 1}")
        return float(
            -self.beta_at(k) * float(self.L[m])
            + self.log_fact[m]
            + self.log_gsw[m]
            + self.R[k][m]
        )

    def log_z_vector(self, k: int = 0) -> np.ndarray:
        """log Z(m, beta_k) for all m = 0..n at once."""
        return (
            -self.beta_at(k) * self.L.astype(np.float64)
            + self.log_fact
            + self.log_gsw
            + self.R[k]
        )

    def child_log_weights(self, k: int, t: int, r: int) -> np.ndarray:
        """Unnormalized log-weights over j = 0..r for the next child count.

        ``t`` children remain (including the one being drawn) and they hold r
        points in total: weight(j) proportional to f_k(j) (f_k**(t-1))(r-j).
        """
        if t < 2:
            raise ValueError("sequential draw needs at least 2 children remaining")
        ff = self.Ff[k]
        fg = self.Fg[k][t - 1]
        a = self._A
        t_prev = self._T[t - 1]
        defect = (a[: r + 1] + t_prev[r::-1]).astype(np.float64)
        return ff[: r + 1] + fg[r::-1] - self.beta_at(k) * defect

    def child_cumweights(self, k: int, t: int, r: int) -> np.ndarray:
        """Cached cumulative linear weights for inverse-CDF child sampling."""
        key = (k, t, r)
        cum = self._child_cum_cache.get(key)
        if cum is None:
            x = self.child_log_weights(k, t, r)
            x -= x.max()
            cum = np.cumsum(np.exp(x))
            self._child_cum_cache[key] = cum
        return cum

    def config_key(self) -> tuple:
        return (self.n, self.beta, self.d, self.K)


def build_tables(
    n: int, beta: float, d: int, depth_pad: int = 4, memory_budget: int = 2 << 30
) -> LevelTables:
    """Build LevelTables seeded with the ground-state lower bound at depth K."""
    return LevelTables(n, beta, d, depth_pad, memory_budget=memory_budget)


@dataclass(frozen=True)
class LogPartitionResult:
    """Stabilized log Z with the achieved depth-doubling delta."""

    logz: LogWeight
    delta: float
    depth: int
    tables: LevelTables

    @property
    def value(self) -> float:
        return self.logz.value


def log_partition(
    n: int,
    beta: float,
    d: int,
    tol: float = DEFAULT_TOL,
    depth_pad_start: int = 4,
    memory_budget: int = 2 << 30,
) -> LogPartitionResult:
    """log Z(n, beta) by depth doubling until successive values differ < tol."""
    check_dimension(d)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n <= 1 or beta == 0 and n == 0:
        tables = build_tables(n, beta, d, depth_pad_start, memory_budget)
        return LogPartitionResult(LogWeight(0.0), 0.0, tables.K, tables)
    base = base_level(max(n, 2), d)
    pad = depth_pad_start
    prev = None
    last_pad = None
    while base + pad <= MAX_DEPTH:
        tables = build_tables(n, beta, d, pad, memory_budget)
        val = tables.log_z(n)
        if prev is not None:
            delta = val - prev
            if abs(delta) < tol:
                return LogPartitionResult(LogWeight(val), delta, tables.K, tables)
        prev = val
        last_pad = pad
        pad *= 2
    # one last strictly deeper attempt at the depth cap
    pad = MAX_DEPTH - base
    if prev is not None and last_pad is not None and pad > last_pad:
        tables = build_tables(n, beta, d, pad, memory_budget)
        val = tables.log_z(n)
        if abs(val - prev) < tol:
            return LogPartitionResult(LogWeight(val), val - prev, tables.K, tables)
    raise ConvergenceError(
        f"log Z(n={n}, beta={beta}, d={d}) not stable within depth {MAX_DEPTH}"
    )


@dataclass(frozen=True)
class LogRatioResult:
    """log Z(n+1)/Z(n) together with the residual against -beta D_n."""

    ratio: float
    residual: float
    increment: int


def log_partition_ratio(
    n: int, beta: float, d: int, tol: float = DEFAULT_TOL, tables: LevelTables = None
) -> LogRatioResult:
    """Consecutive log-partition ratio from one shared table build."""
    from .groundstate import energy_increment

    if n < 2:
        raise ValueError("ratio defined for n >= 2")
    if tables is None or tables.n < n + 1:
        tables = log_partition(n + 1, beta, d, tol).tables
    ratio = tables.log_z(n + 1) - tables.log_z(n)
    d_n = energy_increment(n, d)
    return LogRatioResult(ratio=ratio, residual=ratio + beta * d_n, increment=d_n)


# -- optional binary cache ----------------------------------------------------


def save_tables(tables: LevelTables, path) -> None:
    """Serialize tables to an .npz with a version/key header."""
    cells = 1 << tables.d
    header = json.dumps(
        {
            "version": TABLES_CACHE_VERSION,
            "n": tables.n,
            "beta": tables.beta,
            "d": tables.d,
            "K": tables.K,
            "depth_pad": tables.depth_pad,
        }
    )
    np.savez_compressed(
        path,
        header=np.frombuffer(header.encode(), dtype=np.uint8),
        ff=np.stack(tables.Ff),
        fg=np.stack([np.stack(tables.Fg[k][1:]) for k in range(tables.K + 1)]),
        r=np.stack(tables.R),
        cells=np.int64(cells),
    )


def load_tables(path) -> LevelTables:
    with np.load(path) as blob:
        header = json.loads(bytes(blob["header"]).decode())
        if header["version"] != TABLES_CACHE_VERSION:
            raise ValueError(f"cache version {header['version']} unsupported")
        tables = LevelTables.__new__(LevelTables)
        tables.n = header["n"]
        tables.beta = header["beta"]
        tables.d = header["d"]
        tables.depth_pad = header["depth_pad"]
        tables.K = header["K"]
        refs = _int_refs(tables.d, max(tables.n, 2))
        cells = 1 << tables.d
        tables._A = refs["A"][: tables.n + 1]
        tables._T = [None] + [refs["T"][t][: tables.n + 1] for t in range(1, cells + 1)]
        tables.L = refs["L"][: tables.n + 1]
        tables.log_gsw = log_ground_weights(tables.n, tables.d)
        tables.log_fact = log_factorials(tables.n)
        tables.Ff = list(blob["ff"])
        tables.Fg = [[None] + list(level) for level in blob["fg"]]
        tables.R = list(blob["r"])
        tables._child_cum_cache = {}
    return tables
