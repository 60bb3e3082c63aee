"""Pinned desk-scale verification suites behind the `verify` CLI command.

Each suite runs a battery of invariant checks at fixed parameters and seeds,
small enough to finish in seconds but sharp enough to catch a broken
implementation (the test suite includes a mutation check for that).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import groundstate, numtheory, oracle
from .dyadic import CountTree, hamiltonian, perm_distance_sq, shift_tree
from .groundstate import GroundEnergyTable, is_ground_state, min_partition
from .partition_function import build_tables, log_partition
from .sampler import SamplerState, make_rng, sample_counts, sample_partition
from .stats import chisq_gof


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _check(results: list, suite: str, name: str, passed: bool, detail: str = "") -> None:
    results.append(CheckResult(suite, name, bool(passed), detail))


def gamma_growth_constant(d: int) -> float:
    """Sharp constant in gamma(n) <= C n^{(d-2)/d}: geometric-series bound.

    gamma(n) <= (2^d - 1) sum_{i<=k} 2^{i(d-2)} with 2^{kd} <= n.  The often
    quoted constant 4 is only the d -> infinity limit of this and is violated
    at finite d (e.g. gamma(63) = 21 > 4 * 63^{1/3} at d = 3).
    """
    return (2**d - 1) / (2 ** (d - 2) - 1)


def verify_numtheory(trials: int = 20_000, seed: int = 0) -> list[CheckResult]:
    out: list[CheckResult] = []
    rng = make_rng(seed, 0)
    for d in (3, 4, 5):
        c_d = gamma_growth_constant(d)
        viol_sub = viol_inc = viol_growth = 0
        worst = 0.0
        ns = rng.integers(0, 10**6, size=trials)
        rs = rng.integers(0, 10**6, size=trials)
        for n, r in zip(ns.tolist(), rs.tolist()):
            gn, gr, gnr = numtheory.gamma(n, d), numtheory.gamma(r, d), numtheory.gamma(n + r, d)
            if gnr > gn + gr:
                viol_sub += 1
            if r and gnr > gn + c_d * r ** ((d - 2) / d) * (1 + 1e-9):
                viol_inc += 1
            if n:
                ratio = gn / n ** ((d - 2) / d)
                worst = max(worst, ratio)
                if ratio > c_d * (1 + 1e-9):
                    viol_growth += 1
        _check(out, "numtheory", f"subadditivity d={d}", viol_sub == 0, f"{viol_sub} violations")
        _check(
            out,
            "numtheory",
            f"increment bound (C={c_d:.3f}) d={d}",
            viol_inc == 0,
            f"{viol_inc} violations",
        )
        _check(
            out,
            "numtheory",
            f"growth bound (C={c_d:.3f}) d={d}",
            viol_growth == 0,
            f"sup ratio {worst:.4f}",
        )
    single = all(
        numtheory.gamma(m + 1, 3) <= numtheory.gamma(m, 3) + 1 for m in range(200_000)
    )
    _check(out, "numtheory", "single-step bound d=3 (m<=2e5)", single)
    round_trip = all(
        numtheory.digits_base(int(n), 4).value() == int(n) for n in rng.integers(0, 10**9, 2000)
    )
    _check(out, "numtheory", "digit round trip", round_trip)
    return out


def verify_groundstate(n_max: int = 100_000) -> list[CheckResult]:
    out: list[CheckResult] = []
    for d in (3, 4, 5):
        table = GroundEnergyTable.build(n_max, d)
        n = np.arange(n_max, dtype=np.int64)
        rec = (table.D[n >> d] << (d - 2)) + 2 * (n - (n >> d))
        _check(out, "groundstate", f"closed form = recursion d={d}", bool(np.array_equal(table.D, rec)))
        e = table.D - 2 * n
        rec_e = (e[n >> d] << (d - 2)) + (2 ** (d - 1) - 2) * (n >> d)
        _check(
            out,
            "groundstate",
            f"E_n identity d={d}",
            bool(np.array_equal(e[2:], rec_e[2:])),
        )
        tele = np.array_equal(np.diff(table.L), table.D)
        _check(out, "groundstate", f"telescoping d={d}", bool(tele))
    ok = all(is_ground_state(min_partition(n, 3)) for n in range(1, 2000))
    _check(out, "groundstate", "min_partition satisfies characterization", ok)
    ok = all(
        hamiltonian(min_partition(n, 3)) == groundstate.ground_energy(n, 3)
        for n in range(200)
    )
    _check(out, "groundstate", "H(min_partition) = L_n (n<200)", ok)
    oracle_ok = all(
        oracle.min_energy_value(n, 3) == groundstate.ground_energy(n, 3) for n in range(13)
    )
    _check(out, "groundstate", "oracle minimum = closed form (n<=12)", oracle_ok)
    _check(
        out,
        "groundstate",
        "b_9 reference value",
        groundstate.count_ground_states(9, 3) == 469_762_048,
    )
    _check(
        out,
        "groundstate",
        "GSW(9)/GSW(8) = 7/16",
        groundstate.ground_state_weight_exact(9, 3)
        / groundstate.ground_state_weight_exact(8, 3)
        == Fraction(7, 16),
    )
    lgsw = groundstate.log_ground_weights(10_000, 3)
    lfact = groundstate.log_factorials(10_000)
    _check(
        out,
        "groundstate",
        "phase volume of ground set <= 1 (n<=1e4)",
        bool(np.all(lfact + lgsw <= 1e-9)),
    )
    c = 2 * 3 * math.log(2)
    steps = np.abs(np.diff(lgsw))
    bound = c * np.log(np.arange(2, 10_002))
    _check(
        out,
        "groundstate",
        "one-step GSW ratio bound (n<=1e4)",
        bool(np.all(steps <= bound)),
        f"max ratio {float(np.max(steps / bound)):.3f}",
    )
    return out


def verify_zbounds(n: int = 128, betas=(0.25, 1.0, 4.0), dims=(3, 4)) -> list[CheckResult]:
    out: list[CheckResult] = []
    for d in dims:
        table = GroundEnergyTable.build(n, d)
        lgsw = groundstate.log_ground_weights(n, d)
        lfact = groundstate.log_factorials(n)
        m = np.arange(n + 1, dtype=np.float64)
        for beta in betas:
            tabs = build_tables(n, beta, d, depth_pad=8)
            lz = tabs.log_z_vector()
            lo = -beta * table.L + lfact + lgsw
            hi = -beta * table.L.astype(np.float64)
            ok_lo = bool(np.all(lz >= lo - 1e-9))
            ok_hi = bool(np.all(lz <= hi + 1e-9))
            ok_lin = bool(np.all(lz >= hi - (d * math.log(2) + 1) * m - 1e-9))
            _check(out, "zbounds", f"lower bracket d={d} beta={beta}", ok_lo)
            _check(out, "zbounds", f"upper bracket d={d} beta={beta}", ok_hi)
            _check(out, "zbounds", f"linear-correction bracket d={d} beta={beta}", ok_lin)
    series = sum(
        (1 - 2.0**-3) * 2.0 ** (-3 * (k - 1)) * math.exp(-2 * 2.0 ** (k - 1))
        for k in range(1, 80)
    )
    got = log_partition(2, 1.0, 3, tol=1e-12).value
    _check(
        out,
        "zbounds",
        "two-point series oracle",
        abs(got - math.log(series)) < 1e-10,
        f"diff {abs(got - math.log(series)):.2e}",
    )
    vals = [build_tables(64, 0.0, 3, depth_pad=p).log_z(64) for p in (2, 4, 8, 16)]
    _check(
        out,
        "zbounds",
        "truncation monotonicity (beta=0)",
        all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])),
        f"{[round(v, 6) for v in vals]}",
    )
    return out


def verify_sampler(samples: int = 30_000, seed: int = 0) -> list[CheckResult]:
    out: list[CheckResult] = []
    d = 3
    for n, beta in ((2, 0.5), (3, 2.0)):
        tab = build_tables(n, beta, d, depth_pad=14)
        probs = oracle.exact_count_distribution(n, beta, d)
        state = SamplerState(tab, seed=seed, stream=0)
        obs: dict = {}
        for _ in range(samples):
            c = sample_counts(n, 0, state)
            obs[c] = obs.get(c, 0) + 1
        stat, dof, p = chisq_gof(obs, probs)
        _check(
            out,
            "sampler",
            f"chi2 exactness n={n} beta={beta}",
            p > 0.001,
            f"p={p:.4f} dof={dof}",
        )
    tab = build_tables(200, 0.0, 3, depth_pad=10)
    state = SamplerState(tab, seed=seed, stream=1)
    counts = np.zeros(8)
    reps = 400
    for _ in range(reps):
        tree = sample_partition(200, 0.0, 3, state)
        for j, cnt in enumerate(tree.children_counts(0, (0, 0, 0))):
            counts[j] += cnt
    expected = 200 * reps / 8
    zscores = (counts - expected) / math.sqrt(200 * reps * (1 / 8) * (7 / 8))
    _check(
        out,
        "sampler",
        "beta=0 level-1 means uniform",
        bool(np.all(np.abs(zscores) < 5)),
        f"max |z| = {float(np.max(np.abs(zscores))):.2f}",
    )
    tab = build_tables(64, 50.0, 3, depth_pad=6)
    state = SamplerState(tab, seed=seed, stream=2)
    all_ground = all(
        is_ground_state(sample_partition(64, 50.0, 3, state)) for _ in range(200)
    )
    _check(out, "sampler", "beta=50 concentrates on ground states", all_ground)
    s1 = SamplerState(tab, seed=123, stream=9)
    s2 = SamplerState(tab, seed=123, stream=9)
    t1 = sample_partition(64, 50.0, 3, s1)
    t2 = sample_partition(64, 50.0, 3, s2)
    _check(out, "sampler", "determinism under fixed seeds", t1 == t2)
    return out


def _two_coordinate_instance(rng, d: int):
    m = int(rng.integers(1, 5))
    cells = 1 << d
    b = sorted((int(x) for x in rng.integers(0, 40, size=cells)), reverse=True)
    k = int(rng.integers(1, b[1] + 1)) if b[1] >= 1 else 0
    return m, b, k


def _tree_with_children(d: int, level: int, counts) -> CountTree:
    """All points in one level-(level-1) cube, split as ``counts``, ground below.

    The enclosing chain down to level-1 contributes no cross pairs, so energy
    differences between two such trees isolate the split at ``level``.
    """
    from .dyadic import child_offsets

    total = sum(counts)
    if total < 2:
        raise ValueError("need at least two points")
    nodes = {}
    for lev in range(1, level):
        nodes[(lev, (0,) * d)] = total
    for j, cnt in enumerate(counts):
        if cnt == 0:
            continue
        cc = child_offsets(d)[j]  # children of the all-zero cube
        nodes[(level, cc)] = cnt
        nodes.update(shift_tree(min_partition(cnt, d), level, cc))
    return CountTree(d, total, nodes)


def verify_energygap(instances: int = 2_000, seed: int = 0) -> list[CheckResult]:
    out: list[CheckResult] = []
    rng = make_rng(seed, 0)
    worst = math.inf
    ok_two = True
    for _ in range(instances):
        d = int(rng.choice([3, 4]))
        m, b, k = _two_coordinate_instance(rng, d)
        if k == 0 or sum(b) < 2:
            continue
        f2 = list(b)
        f1 = list(b)
        f1[0] += k
        f1[1] -= k
        h2 = hamiltonian(_tree_with_children(d, m, f2))
        h1 = hamiltonian(_tree_with_children(d, m, f1))
        if h1 - h2 < (1 << ((d - 2) * m)) * k * k:
            ok_two = False
            break
    _check(out, "energygap", "two-coordinate gap (exact)", ok_two)
    ok_gen = True
    for _ in range(instances):
        d = int(rng.choice([3, 4]))
        m = int(rng.integers(1, 5))
        cells = 1 << d
        total = int(rng.integers(2, 60))
        cuts = np.sort(rng.integers(0, total + 1, size=cells - 1))
        a = np.diff(np.concatenate(([0], cuts, [total]))).astype(int).tolist()
        e = min_partition(total, d).children_counts(0, (0,) * d)
        ha = hamiltonian(_tree_with_children(d, m, a))
        he = hamiltonian(_tree_with_children(d, m, e))
        dist2 = perm_distance_sq(a, e)
        bound = Fraction(1, 2 * (cells + 1)) * (1 << ((d - 2) * m)) * dist2
        gap = ha - he
        if dist2 and gap < bound:
            ok_gen = False
            break
        if dist2:
            worst = min(worst, gap / float((1 << ((d - 2) * m)) * dist2))
    _check(
        out,
        "energygap",
        "general gap with c' = 1/(2(2^d+1))",
        ok_gen,
        f"tightest observed constant {worst:.4f}",
    )
    return out


SUITES = {
    "numtheory": verify_numtheory,
    "groundstate": verify_groundstate,
    "zbounds": verify_zbounds,
    "sampler": verify_sampler,
    "energygap": verify_energygap,
}


def run_suite(name: str) -> list[CheckResult]:
    if name == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn())
        return results
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
