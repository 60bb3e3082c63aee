"""Perfect sampling from the Gibbs measure, top-down over the dyadic tree.

Children counts of a node are drawn sequentially from their exact conditional
law given the parent count, read from the same LevelTables the partition
function uses:

    P(n_i = j | r points left among t children) =
        f_k(j) (f_k**(t-1))(r - j) / (f_k**t)(r);

the last child takes the remainder.  A node of count >= 2 that survives to
the truncation depth K has its subtree drawn uniformly over ground states,
which matches the ground-state seeding of the tables exactly: the sampled law
is the Gibbs measure conditioned on being a ground state beyond level K.

Reproducibility: a replica is addressed by (seed, stream); the generator is
PCG64 seeded from SeedSequence(entropy=seed, spawn_key=(stream,)), so replica
streams are independent and the output is independent of scheduling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import (
    WORD_BITS,
    CountTree,
    PointConfiguration,
    child_coords,
    child_offsets,
    shift_tree,
)
from .groundstate import sample_ground_state
from .numtheory import base_level
from .partition_function import LevelTables


class DepthExhaustedError(RuntimeError):
    """Descent would pass level 64, exhausting fixed-point resolution."""


# Nodes holding at most this many points draw their whole children composition
# from a cached categorical over all compositions; larger counts fall back to
# sequential per-child conditionals.  Both paths realize the same exact law.
COMP_ENUM_MAX = 6

_COMP_LISTS: dict = {}


def _composition_array(m: int, cells: int) -> np.ndarray:
    """All compositions of m over ``cells`` slots as one (C, cells) int array."""
    key = (m, cells)
    arr = _COMP_LISTS.get(key)
    if arr is None:
        from .oracle import compositions

        arr = np.array(list(compositions(m, cells)), dtype=np.int64)
        _COMP_LISTS[key] = arr
    return arr


def make_rng(seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SamplerState:
    """LevelTables plus one replica's random stream."""

    tables: LevelTables
    seed: int = 0
    stream: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = make_rng(self.seed, self.stream)


def _comp_distribution(tables: LevelTables, k: int, m: int):
    """Cached (compositions, cumulative weights) of the children law at level k.

    The composition weight is prod_i f_k(c_i); the per-count references and
    float parts come straight from the tables, so this matches the sequential
    conditional law exactly.
    """
    cache = tables._child_cum_cache
    key = ("comp", k, m)
    entry = cache.get(key)
    if entry is None:
        cells = 1 << tables.d
        comps = _composition_array(m, cells)
        log_f = tables.Ff[k][: m + 1] - tables.beta_at(k) * tables._A[: m + 1].astype(
            np.float64
        )
        logw = log_f[comps].sum(axis=1)
        logw -= logw.max()
        entry = (comps, np.cumsum(np.exp(logw)))
        cache[key] = entry
    return entry


def sample_counts(m: int, k: int, state: SamplerState) -> tuple:
    """One exact draw of the 2^d children counts of a level-k node holding m."""
    tables = state.tables
    if m > tables.n:
        raise ValueError(f"count {m} exceeds table size {tables.n}")
    if k > tables.K:
        raise ValueError(f"level {k} beyond table depth {tables.K}")
    cells = 1 << tables.d
    if m == 0:
        return (0,) * cells
    if m == 1:
        j = int(state.rng.integers(cells))
        return tuple(1 if i == j else 0 for i in range(cells))
    if m <= COMP_ENUM_MAX:
        comps, cum = _comp_distribution(tables, k, m)
        u = state.rng.random() * cum[-1]
        idx = int(np.searchsorted(cum, u, side="right"))
        if idx >= len(comps):
            idx = len(comps) - 1
        return tuple(int(c) for c in comps[idx])
    counts = []
    r = m
    for i in range(cells - 1):
        if r == 0:
            counts.append(0)
            continue
        t = cells - i
        cum = tables.child_cumweights(k, t, r)
        u = state.rng.random() * cum[-1]
        j = int(np.searchsorted(cum, u, side="right"))
        if j > r:
            j = r
        counts.append(j)
        r -= j
    counts.append(r)
    return tuple(counts)


def sample_partition(n: int, beta: float, d: int, state: SamplerState) -> CountTree:
    """A resolved CountTree distributed as the (depth-K truncated) Gibbs marginal."""
    tables = state.tables
    if n > tables.n:
        raise ValueError(f"tables cover counts up to {tables.n}, requested {n}")
    if beta != tables.beta or d != tables.d:
        raise ValueError("tables were built for different (beta, d)")
    nodes: dict = {}
    offs = child_offsets(d)
    stack = [(0, (0,) * d, n)]
    while stack:
        level, coords, cnt = stack.pop()
        if cnt <= 1:
            continue
        if level > tables.K:
            if level + base_level(cnt, d) > WORD_BITS:
                raise DepthExhaustedError(
                    f"count {cnt} at level {level} cannot resolve within 64 levels"
                )
            ground = sample_ground_state(cnt, d, state.rng)
            nodes.update(shift_tree(ground, level, coords))
            continue
        comp = sample_counts(cnt, level, state)
        # push in reverse so children are processed in lexicographic order
        for j in range(len(comp) - 1, -1, -1):
            if comp[j] == 0:
                continue
            cc = child_coords(coords, offs[j])
            nodes[(level + 1, cc)] = comp[j]
            stack.append((level + 1, cc, comp[j]))
    return CountTree(d, n, nodes)


def sample_points_array(tree: CountTree, state: SamplerState) -> np.ndarray:
    """Points of a resolved tree as a (n, d) uint64 word array.

    Each count-1 leaf cube gets one point, uniform inside: the leading bits
    are the cube coordinates and the remaining bits are fresh randomness.
    Leaves are visited in (level, coords) order so output is reproducible.
    """
    d = tree.d
    leaves = sorted(
        (level, coords) for level, coords, cnt in tree.leaves() if cnt == 1
    )
    if len(leaves) != tree.n:
        from .dyadic import UnresolvedTreeError

        raise UnresolvedTreeError("tree has a leaf with count >= 2")
    if not leaves:
        return np.zeros((0, d), dtype=np.uint64)
    raw = state.rng.integers(
        0, np.iinfo(np.uint64).max, size=(len(leaves), d), dtype=np.uint64, endpoint=True
    )
    if leaves[0][0] == 0:  # single point, uniform on the whole cube
        return raw
    levels = np.array([lev for lev, _ in leaves], dtype=np.uint64)
    coords = np.array([c for _, c in leaves], dtype=np.uint64)
    shifts = (np.uint64(WORD_BITS) - levels)[:, None]
    mask = (np.uint64(1) << shifts) - np.uint64(1)
    return (coords << shifts) | (raw & mask)


def sample_points(tree: CountTree, state: SamplerState) -> PointConfiguration:
    words = sample_points_array(tree, state)
    pts = tuple(tuple(int(w) for w in row) for row in words)
    return PointConfiguration(points=pts, d=tree.d)


def sample_configuration(
    n: int, beta: float, d: int, state: SamplerState
) -> PointConfiguration:
    tree = sample_partition(n, beta, d, state)
    return sample_points(tree, state)
