"""Monte Carlo verification harness for the fluctuation predictions.

Estimates number variances for regions and variances of smooth linear
statistics over independent perfectly-sampled replicas, fits log-log growth
exponents, and provides an i.i.d. uniform baseline with extensive (volume
order) fluctuations for contrast.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .dyadic import WORD_MOD, PointConfiguration
from .numtheory import check_dimension
from .partition_function import LevelTables, build_tables
from .sampler import SamplerState, sample_partition, sample_points_array
from .stats import LineFit, least_squares_line, variance_with_se

DEFAULT_EXPERIMENT_DEPTH_PAD = 6


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class CubeRegion:
    """A dyadic cube; membership is an exact word-prefix test."""

    level: int
    coords: tuple

    @property
    def name(self) -> str:
        return f"cube_l{self.level}_" + "_".join(map(str, self.coords))

    def volume(self, d: int) -> float:
        return 2.0 ** (-d * self.level)

    def count(self, words: np.ndarray) -> int:
        shift = np.uint64(64 - self.level)
        if self.level == 0:
            return len(words)
        target = np.array(self.coords, dtype=np.uint64)
        return int(np.all((words >> shift) == target, axis=1).sum())


@dataclass(frozen=True)
class BallRegion:
    """A Euclidean ball strictly inside the unit cube.

    Membership is decided in float arithmetic with an exact-rational fallback
    on a thin band around the boundary, so the predicate is exact on
    fixed-point inputs.
    """

    center: tuple
    radius: float

    def __post_init__(self):
        for c in self.center:
            if not (self.radius < c < 1 - self.radius):
                raise ValueError("ball must fit strictly inside the unit cube")

    @property
    def name(self) -> str:
        c = ",".join(f"{x:g}" for x in self.center)
        return f"ball_r{self.radius:g}_c({c})"

    def volume(self, d: int) -> float:
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d

    def count(self, words: np.ndarray) -> int:
        x = words.astype(np.float64) * 2.0**-64
        centre = np.array(self.center)
        dist2 = ((x - centre) ** 2).sum(axis=1)
        r2 = self.radius * self.radius
        inside = dist2 <= r2
        band = np.abs(dist2 - r2) < 1e-9
        if band.any():
            c_frac = [Fraction(c).limit_denominator(10**15) for c in self.center]
            r2_frac = Fraction(self.radius).limit_denominator(10**15) ** 2
            for i in np.nonzero(band)[0]:
                s = sum(
                    (Fraction(int(w), WORD_MOD) - cf) ** 2
                    for w, cf in zip(words[i], c_frac)
                )
                inside[i] = s <= r2_frac
        return int(inside.sum())


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned half-open box [lo, hi); membership via exact word thresholds."""

    lo: tuple
    hi: tuple
    _lo_words: tuple = field(init=False, repr=False)
    _hi_words: tuple = field(init=False, repr=False)

    def __post_init__(self):
        lo_w, hi_w = [], []
        for a, b in zip(self.lo, self.hi):
            if not (0 <= a < b <= 1):
                raise ValueError("box bounds must satisfy 0 <= lo < hi <= 1")
            # x = w / 2^64 >= a  iff  w >= ceil(a 2^64);  x < b  iff  w < ceil(b 2^64)
            lo_w.append(math.ceil(Fraction(a) * WORD_MOD))
            hi_w.append(math.ceil(Fraction(b) * WORD_MOD))
        object.__setattr__(self, "_lo_words", tuple(lo_w))
        object.__setattr__(self, "_hi_words", tuple(hi_w))

    @property
    def name(self) -> str:
        return "box_" + "_".join(f"{a:g}-{b:g}" for a, b in zip(self.lo, self.hi))

    def volume(self, d: int) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def count(self, words: np.ndarray) -> int:
        ok = np.ones(len(words), dtype=bool)
        for j, (lo_w, hi_w) in enumerate(zip(self._lo_words, self._hi_words)):
            col = words[:, j]
            if lo_w > 0:
                ok &= col >= np.uint64(lo_w)
            if hi_w < WORD_MOD:  # a threshold of 2^64 imposes no upper cut
                ok &= col < np.uint64(hi_w)
        return int(ok.sum())


Region = CubeRegion | BallRegion | BoxRegion


def count_in_region(cfg, region: Region) -> int:
    """Exact membership count of a configuration (or word array) in a region."""
    words = cfg if isinstance(cfg, np.ndarray) else _config_words(cfg)
    return region.count(words)


def _config_words(cfg: PointConfiguration) -> np.ndarray:
    return np.array(cfg.points, dtype=np.uint64).reshape(cfg.n, cfg.d)


# -- linear statistics ---------------------------------------------------------


@dataclass(frozen=True)
class LinearStatistic:
    """A test function summed over the configuration, with Lipschitz metadata."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]  # (n, d) floats -> (n,) values
    lipschitz: float

    def value(self, words: np.ndarray) -> float:
        if len(words) == 0:
            return 0.0
        x = words.astype(np.float64) * 2.0**-64
        return float(np.asarray(self.func(x), dtype=np.float64).sum())


STATISTICS: dict[str, LinearStatistic] = {
    "one": LinearStatistic("one", lambda x: np.ones(len(x)), lipschitz=0.0),
    "coord1": LinearStatistic("coord1", lambda x: x[:, 0], lipschitz=1.0),
    "smooth_cos": LinearStatistic(
        "smooth_cos",
        lambda x: np.cos(math.pi * x[:, 0]) * np.cos(math.pi * x[:, 1]),
        lipschitz=math.pi,
    ),
}


def verify_lipschitz(stat: LinearStatistic, d: int, rng, samples: int = 20_000) -> float:
    """Largest observed |f(x)-f(y)| / |x-y|; must stay within 1.01 * L."""
    x = rng.random((samples, d))
    y = rng.random((samples, d))
    num = np.abs(np.asarray(stat.func(x)) - np.asarray(stat.func(y)))
    den = np.sqrt(((x - y) ** 2).sum(axis=1))
    ratio = float((num / np.maximum(den, 1e-300)).max())
    if ratio > 1.01 * stat.lipschitz + 1e-12:
        raise ValueError(
            f"statistic {stat.name}: observed Lipschitz ratio {ratio} exceeds "
            f"declared constant {stat.lipschitz}"
        )
    return ratio


def linear_statistic_value(cfg, stat: LinearStatistic) -> float:
    words = cfg if isinstance(cfg, np.ndarray) else _config_words(cfg)
    return stat.value(words)


# -- replica harness -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentRow:
    """One (n, beta, d, statistic) measurement with uncertainty of the variance."""

    n: int
    beta: float
    d: int
    stat: str
    reps: int
    mean: float
    variance: float
    var_se: float
    seed: int

    CSV_HEADER = "n,beta,d,stat,reps,mean,variance,var_se,seed"

    def csv_row(self) -> str:
        return (
            f"{self.n},{self.beta!r},{self.d},{self.stat},{self.reps},"
            f"{self.mean!r},{self.variance!r},{self.var_se!r},{self.seed}"
        )

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "d": self.d,
            "stat": self.stat,
            "reps": self.reps,
            "mean": self.mean,
            "variance": self.variance,
            "var_se": self.var_se,
            "seed": self.seed,
        }


def _evaluate(statistic, words: np.ndarray) -> float:
    if isinstance(statistic, LinearStatistic):
        return statistic.value(words)
    return float(statistic.count(words))


def _stat_name(statistic) -> str:
    return statistic.name


def estimate_variances(
    statistics: Sequence,
    n: int,
    beta: float,
    d: int,
    reps: int,
    seed: int,
    tables: LevelTables | None = None,
    depth_pad: int = DEFAULT_EXPERIMENT_DEPTH_PAD,
) -> list[ExperimentRow]:
    """Sample ``reps`` replicas once and evaluate every statistic on each.

    Replica r uses stream id r, so results are independent of evaluation
    order and identical to ``reps`` single-statistic runs with the same seed.
    """
    check_dimension(d)
    if reps < 100:
        raise ValueError("need at least 100 replicas for a variance estimate")
    if tables is None:
        tables = build_tables(n, beta, d, depth_pad)
    workers = thread_count()
    if workers > 1:
        values = _replica_values_pooled(statistics, n, beta, d, reps, seed, tables, workers)
    else:
        values = _replica_values(statistics, n, beta, d, range(reps), seed, tables)
    rows = []
    for s, statistic in enumerate(statistics):
        var, se = variance_with_se(values[s])
        rows.append(
            ExperimentRow(
                n=n,
                beta=beta,
                d=d,
                stat=_stat_name(statistic),
                reps=reps,
                mean=float(values[s].mean()),
                variance=var,
                var_se=se,
                seed=seed,
            )
        )
    return rows


def _replica_values(statistics, n, beta, d, streams, seed, tables) -> np.ndarray:
    """Statistic values for the given replica streams, one column per replica."""
    values = np.empty((len(statistics), len(streams)))
    for col, r in enumerate(streams):
        state = SamplerState(tables, seed=seed, stream=r)
        tree = sample_partition(n, beta, d, state)
        words = sample_points_array(tree, state)
        for s, statistic in enumerate(statistics):
            values[s, col] = _evaluate(statistic, words)
    return values


def _replica_values_pooled(statistics, n, beta, d, reps, seed, tables, workers) -> np.ndarray:
    """Replica loop split over a process pool; per-replica streams make the
    result identical to the serial loop regardless of the worker count."""
    import multiprocessing as mp

    chunks = [list(range(w, reps, workers)) for w in range(workers)]
    ctx = mp.get_context("fork")
    with ctx.Pool(workers) as pool:
        parts = pool.starmap(
            _replica_values,
            [(statistics, n, beta, d, chunk, seed, tables) for chunk in chunks],
        )
    values = np.empty((len(statistics), reps))
    for chunk, part in zip(chunks, parts):
        values[:, chunk] = part
    return values


def estimate_variance(
    statistic,
    n: int,
    beta: float,
    d: int,
    reps: int,
    seed: int,
    tables: LevelTables | None = None,
    depth_pad: int = DEFAULT_EXPERIMENT_DEPTH_PAD,
) -> ExperimentRow:
    return estimate_variances([statistic], n, beta, d, reps, seed, tables, depth_pad)[0]


def poisson_baseline(
    n: int, d: int, statistic, reps: int, seed: int
) -> ExperimentRow:
    """i.i.d. uniform control (the beta = 0 gas), vectorized."""
    check_dimension(d)
    if reps < 100:
        raise ValueError("need at least 100 replicas for a variance estimate")
    values = np.empty(reps)
    for r in range(reps):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
        )
        words = rng.integers(
            0, np.iinfo(np.uint64).max, size=(n, d), dtype=np.uint64, endpoint=True
        )
        values[r] = _evaluate(statistic, words)
    var, se = variance_with_se(values)
    return ExperimentRow(
        n=n,
        beta=0.0,
        d=d,
        stat=_stat_name(statistic),
        reps=reps,
        mean=float(values.mean()),
        variance=var,
        var_se=se,
        seed=seed,
    )


def fit_exponent(rows: Sequence) -> LineFit:
    """Log-log least squares of variance against n.

    Expects at least 5 geometrically spaced n values.  Non-positive variances
    (which occur at perfectly divisible n where the counts are rigid beyond
    Monte Carlo resolution) are excluded with a warning; at least 3 points
    must survive for a slope and its standard error.
    """
    if len(rows) < 5:
        raise ValueError("need at least 5 n values for an exponent fit")
    pairs = []
    for row in rows:
        n, v = (row.n, row.variance) if isinstance(row, ExperimentRow) else row
        if v <= 0:
            warnings.warn(f"dropping non-positive variance at n={n}")
            continue
        pairs.append((math.log(n), math.log(v)))
    if len(pairs) < 3:
        raise ValueError("fewer than 3 positive-variance points remain")
    x, y = zip(*pairs)
    return least_squares_line(np.array(x), np.array(y))


# -- output -------------------------------------------------------------------


def write_rows_csv(path, rows: Sequence[ExperimentRow]) -> None:
    with open(path, "w") as fh:
        fh.write(ExperimentRow.CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


def summary_json(rows: Sequence[ExperimentRow], fit: LineFit | None, config: dict) -> str:
    payload = {
        "config": config,
        "rows": [r.as_dict() for r in rows],
    }
    if fit is not None:
        payload["fit"] = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "slope_se": fit.slope_se,
            "slope_ci95": [fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se],
        }
    return json.dumps(payload, indent=2)


def thread_count() -> int:
    """Worker count for replica loops, from the HCGAS_THREADS environment variable."""
    try:
        return max(1, int(os.environ.get("HCGAS_THREADS", "1")))
    except ValueError:
        return 1
