"""Dyadic-cube geometry, occupancy trees, and exact Hamiltonian evaluation.

Coordinates are 64-bit unsigned fixed-point fractions (value = word / 2^64),
so membership in a dyadic cube and the separation level of a pair are exact
bit operations and the deepest resolvable level is 64.  All energies are
exact arbitrary-precision integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .numtheory import check_dimension

WORD_BITS = 64
WORD_MOD = 1 << WORD_BITS

Coords = tuple  # d integers
NodeKey = tuple  # (level, coords)


class ColocatedPointsError(ValueError):
    """Two points share every coordinate word: infinite energy pair."""


class UnresolvedTreeError(ValueError):
    """A node with count >= 2 has no children, so its energy is undetermined."""


class TreeInvariantError(ValueError):
    """Stored children counts do not sum to their parent's count."""


@dataclass(frozen=True)
class DyadicCube:
    """The cube prod_j [i_j 2^{-level}, (i_j+1) 2^{-level}) of side 2^{-level}."""

    level: int
    coords: Coords

    def __post_init__(self):
        if self.level < 0 or self.level > WORD_BITS:
            raise ValueError(f"level must be in [0, {WORD_BITS}], got {self.level}")
        for i in self.coords:
            if not 0 <= i < (1 << self.level):
                raise ValueError(f"coordinate {i} out of range at level {self.level}")

    @property
    def d(self) -> int:
        return len(self.coords)

    def contains_word(self, words: Sequence[int]) -> bool:
        shift = WORD_BITS - self.level
        return all((w >> shift) == i for w, i in zip(words, self.coords))


@lru_cache(maxsize=None)
def child_offsets(d: int) -> tuple:
    """The 2^d child offsets in lexicographic order of the coordinate tuple."""
    return tuple(
        tuple((j >> (d - 1 - axis)) & 1 for axis in range(d)) for j in range(1 << d)
    )


def parent_key(level: int, coords: Coords) -> NodeKey:
    return level - 1, tuple(c >> 1 for c in coords)


def child_coords(coords: Coords, offset: Coords) -> Coords:
    return tuple(2 * c + o for c, o in zip(coords, offset))


@dataclass(frozen=True)
class PointConfiguration:
    """n points in [0,1)^d with fixed-point coordinates (tuples of 64-bit words)."""

    points: tuple
    d: int

    def __post_init__(self):
        check_dimension(self.d)
        seen = set()
        for p in self.points:
            if len(p) != self.d:
                raise ValueError(f"point {p!r} does not have {self.d} coordinates")
            for w in p:
                if not 0 <= w < WORD_MOD:
                    raise ValueError(f"coordinate word {w} outside [0, 2^64)")
            if p in seen:
                raise ColocatedPointsError(f"co-located points at words {p!r}")
            seen.add(p)

    @property
    def n(self) -> int:
        return len(self.points)

    def floats(self) -> list[tuple[float, ...]]:
        return [tuple(w / WORD_MOD for w in p) for p in self.points]


def separation_level(x: Sequence[int], y: Sequence[int]) -> int:
    """Smallest k such that x and y are in different dyadic cubes of side 2^{-k}.

    Equals 1 + (number of leading bit positions shared by all coordinates).
    """
    best = WORD_BITS
    distinct = False
    for wx, wy in zip(x, y):
        diff = wx ^ wy
        if diff:
            distinct = True
            shared = WORD_BITS - diff.bit_length()
            if shared < best:
                best = shared
    if not distinct:
        raise ColocatedPointsError("co-located points: infinite energy pair")
    return best + 1


def pair_potential(x: Sequence[int], y: Sequence[int], d: int) -> int:
    """2^{(d-2)(k-1)} for separation level k; an exact positive integer."""
    check_dimension(d)
    k = separation_level(x, y)
    return 1 << ((d - 2) * (k - 1))


class CountTree:
    """Sparse occupancy record: particle counts per dyadic cube.

    The root (level 0) is implicit with count ``n``.  ``nodes`` maps
    (level, coords) -> positive count for every materialized cube at
    level >= 1; zero-count cubes are never stored.  The tree is *resolved*
    when every node of count >= 2 has stored children, i.e. every leaf
    holds at most one point.
    """

    __slots__ = ("d", "n", "nodes")

    def __init__(self, d: int, n: int, nodes: dict):
        check_dimension(d)
        if n < 0:
            raise ValueError("total count must be non-negative")
        self.d = d
        self.n = n
        self.nodes = nodes

    # -- structure ---------------------------------------------------------

    def count(self, level: int, coords: Coords) -> int:
        if level == 0:
            return self.n
        return self.nodes.get((level, coords), 0)

    def child_groups(self) -> dict:
        """Map (level, coords) of every internal node to its stored children counts."""
        groups: dict = {}
        for (level, coords), cnt in self.nodes.items():
            pk = (level - 1, tuple(c >> 1 for c in coords))
            groups.setdefault(pk, []).append(cnt)
        return groups

    def children_counts(self, level: int, coords: Coords) -> list[int]:
        """Counts of all 2^d children (absent children count 0)."""
        return [
            self.nodes.get((level + 1, child_coords(coords, off)), 0)
            for off in child_offsets(self.d)
        ]

    def has_children(self, level: int, coords: Coords) -> bool:
        return any(
            (level + 1, child_coords(coords, off)) in self.nodes
            for off in child_offsets(self.d)
        )

    def walk(self) -> Iterator[tuple[int, Coords, int]]:
        """Yield (level, coords, count) for the root and every stored node, top-down."""
        yield 0, (0,) * self.d, self.n
        for (level, coords), cnt in sorted(self.nodes.items()):
            yield level, coords, cnt

    def validate(self) -> None:
        """Check reachability, child-sum consistency, and that counts <= 1 are leaves."""
        root = (0, (0,) * self.d)
        groups = self.child_groups()
        for (level, coords), cnt in self.nodes.items():
            if cnt <= 0:
                raise TreeInvariantError(
                    f"stored node with count {cnt} at {(level, coords)}"
                )
            if level <= 0:
                raise TreeInvariantError("stored nodes must have level >= 1")
        for pk, kids in groups.items():
            cnt = self.n if pk == root else self.nodes.get(pk)
            if cnt is None:
                raise TreeInvariantError(f"orphan children under missing node {pk}")
            if cnt <= 1:
                raise TreeInvariantError(f"node of count {cnt} at {pk} must be a leaf")
            if sum(kids) != cnt:
                raise TreeInvariantError(
                    f"children of {pk} sum to {sum(kids)}, expected {cnt}"
                )

    def is_resolved(self) -> bool:
        groups = self.child_groups()
        if self.n >= 2 and (0, (0,) * self.d) not in groups:
            return False
        return all(
            cnt < 2 or key in groups for key, cnt in self.nodes.items()
        )

    def leaves(self) -> Iterator[tuple[int, Coords, int]]:
        internal = self.child_groups().keys()
        root = (0, (0,) * self.d)
        if root not in internal:
            yield 0, root[1], self.n
            return
        for key, cnt in self.nodes.items():
            if key not in internal:
                yield key[0], key[1], cnt

    def depth(self) -> int:
        return max((level for level, _ in self.nodes), default=0)

    # -- equality / hashing on the sparse map ------------------------------

    def key(self):
        return (self.d, self.n, tuple(sorted(self.nodes.items())))

    def __eq__(self, other):
        return isinstance(other, CountTree) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"CountTree(d={self.d}, n={self.n}, nodes={len(self.nodes)})"

    # -- serialization: one node per line "level i_1 ... i_d count" --------

    def to_lines(self) -> list[str]:
        rows = [(0, (0,) * self.d, self.n)]
        rows += [(lvl, coords, cnt) for (lvl, coords), cnt in self.nodes.items()]
        rows.sort(key=lambda r: (r[0], r[1]))
        return [" ".join(map(str, (lvl, *coords, cnt))) for lvl, coords, cnt in rows]

    @classmethod
    def from_lines(cls, lines: Iterable[str], d: int) -> "CountTree":
        nodes = {}
        n = None
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [int(tok) for tok in line.split()]
            if len(parts) != d + 2:
                raise ValueError(f"expected {d + 2} fields per line, got {len(parts)}")
            level, *coords, cnt = parts
            if level == 0:
                n = cnt
            else:
                nodes[(level, tuple(coords))] = cnt
        if n is None:
            raise ValueError("missing root line (level 0)")
        tree = cls(d, n, nodes)
        tree.validate()
        return tree


def shift_tree(tree: CountTree, level: int, coords: Coords) -> dict:
    """Re-root ``tree`` at the cube (level, coords): returns a node map fragment.

    The fragment includes the root of ``tree`` as a node at (level, coords)
    (omitted when level == 0) and is ready to merge into an enclosing tree.
    """
    out = {}
    if level > 0 and tree.n > 0:
        out[(level, coords)] = tree.n
    for (lvl, c), cnt in tree.nodes.items():
        shifted = tuple((ci << lvl) + xi for ci, xi in zip(coords, c))
        out[(level + lvl, shifted)] = cnt
    return out


def induce_tree(cfg: PointConfiguration) -> CountTree:
    """The unique resolved CountTree of a configuration."""
    d = cfg.d
    nodes = {}

    def split(points: list, level: int, coords: Coords) -> None:
        if level >= WORD_BITS:
            raise ColocatedPointsError("points identical to full 64-bit resolution")
        shift = WORD_BITS - 1 - level
        buckets: dict[Coords, list] = {}
        for p in points:
            off = tuple((w >> shift) & 1 for w in p)
            buckets.setdefault(off, []).append(p)
        for off, pts in buckets.items():
            cc = child_coords(coords, off)
            nodes[(level + 1, cc)] = len(pts)
            if len(pts) >= 2:
                split(pts, level + 1, cc)

    if cfg.n >= 2:
        split(list(cfg.points), 0, (0,) * d)
    return CountTree(d, cfg.n, nodes)


def hamiltonian(tree: CountTree) -> int:
    """Exact energy of a resolved tree via the level decomposition.

    Ordered pairs first separated at level k contribute 2^{(d-2)(k-1)} each;
    at a node v of level k-1 there are N(v)^2 - sum_c N(c)^2 such pairs.
    """
    d = tree.d
    root = (0, (0,) * d)
    groups = tree.child_groups()
    total = 0
    internal = set(groups)
    for key, cnt in tree.nodes.items():
        if cnt >= 2 and key not in internal:
            raise UnresolvedTreeError(f"node of count {cnt} at {key} is unresolved")
    if tree.n >= 2 and root not in internal:
        raise UnresolvedTreeError("root is unresolved")
    for (level, coords), kids in groups.items():
        cnt = tree.n if (level, coords) == root else tree.nodes.get((level, coords))
        if cnt is None:
            raise TreeInvariantError(f"orphan children under missing node {(level, coords)}")
        if sum(kids) != cnt:
            raise TreeInvariantError(
                f"children of {(level, coords)} sum to {sum(kids)}, expected {cnt}"
            )
        cross = cnt * cnt - sum(c * c for c in kids)
        total += cross << ((d - 2) * level)
    return total


def hamiltonian_points(cfg: PointConfiguration) -> int:
    """O(n^2) ordered-pair sum of the pair potential; oracle for hamiltonian()."""
    d = cfg.d
    pts = cfg.points
    total = 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            total += 2 * pair_potential(pts[i], pts[j], d)
    return total


def perm_distance_sq(v1: Sequence[int], v2: Sequence[int]) -> int:
    """Squared permutation-invariant distance: sort both, sum squared gaps."""
    if len(v1) != len(v2):
        raise ValueError(f"length mismatch: {len(v1)} vs {len(v2)}")
    if sum(v1) != sum(v2):
        raise ValueError(f"sum mismatch: {sum(v1)} vs {sum(v2)}")
    a = sorted(v1, reverse=True)
    b = sorted(v2, reverse=True)
    return sum((x - y) * (x - y) for x, y in zip(a, b))


def perm_distance(v1: Sequence[int], v2: Sequence[int]) -> float:
    """Euclidean distance minimized over coordinate permutations of both vectors.

    The minimum is attained with both vectors sorted the same way.
    """
    return math.sqrt(perm_distance_sq(v1, v2))


# -- PointConfiguration CSV: decimal fraction + exact hex word per axis ----

def config_to_csv_lines(cfg: PointConfiguration, metadata: str | None = None) -> list[str]:
    d = cfg.d
    header = ",".join([f"x{j + 1}" for j in range(d)] + [f"w{j + 1}" for j in range(d)])
    lines = []
    if metadata is not None:
        lines.append(f"# {metadata}")
    lines.append(header)
    for p in cfg.points:
        dec = [repr(w / WORD_MOD) for w in p]
        hexw = [f"0x{w:016x}" for w in p]
        lines.append(",".join(dec + hexw))
    return lines


def config_from_csv_lines(lines: Iterable[str], d: int) -> PointConfiguration:
    points = []
    header_skipped = False
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_skipped:
            header_skipped = True
            continue
        fields = line.split(",")
        if len(fields) != 2 * d:
            raise ValueError(f"expected {2 * d} columns, got {len(fields)}")
        words = tuple(int(tok, 16) for tok in fields[d:])
        points.append(words)
    return PointConfiguration(points=tuple(points), d=d)
