"""Brute-force enumeration oracles for small instances.

These are the ground truth the rest of the package is tested against:
exhaustive occupancy-tree enumeration, an independent minimum-energy search
that never assumes the balanced-split answer, and direct integration of the
level-1 count distribution with rigorous interval brackets.

The minimum-energy search uses the Bellman principle over child partitions:
the energy of a tree is (cross pairs at the first split) + 2^{d-2} * (energy
of each child subtree rescaled to the unit cube), so the minimum over trees
satisfies  phi(c) = min over nontrivial partitions of c into <= 2^d parts of
[c^2 - sum p_i^2 + 2^{d-2} sum phi(p_i)].  Trees that postpone a split are
never optimal because 2^{d-2} phi(c) > phi(c) for c >= 2: a minimizer
therefore splits every count >= 2 immediately, and since every partition of
strictly smaller parts is searched, the recursion is exhaustive.  It also
implies depth(minimizer) <= base_level(n) + 1: the search never needs to
materialize deeper trees.
"""
from __future__ import annotations

import math
from itertools import product
from typing import Iterator

from .dyadic import CountTree, child_coords, child_offsets, shift_tree
from .numtheory import base_level, check_dimension


class OracleBudgetError(RuntimeError):
    """Requested enumeration exceeds the configured budget."""


def compositions(total: int, cells: int) -> Iterator[tuple]:
    """All ordered splits of ``total`` over ``cells`` slots, lexicographic."""
    if cells == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, cells - 1):
            yield (first,) + rest


def partitions_at_most(total: int, max_parts: int) -> Iterator[tuple]:
    """Non-increasing partitions of ``total`` into at most ``max_parts`` parts."""

    def rec(remaining: int, cap: int, slots: int):
        if remaining == 0:
            yield ()
            return
        if slots == 0:
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - first, first, slots - 1):
                yield (first,) + rest

    yield from rec(total, total, max_parts)


def count_trees(n: int, d: int, max_depth: int) -> int:
    """Exact number of resolved occupancy trees of depth <= max_depth."""
    check_dimension(d)
    cells = 1 << d
    u = [1 if c <= 1 else 0 for c in range(n + 1)]
    for _ in range(max_depth):
        # coefficient extraction from (sum_j u_j z^j)^{2^d}, truncated at n
        power = [1] + [0] * n
        for _ in range(cells):
            power = [
                sum(power[i] * u[c - i] for i in range(c + 1)) for c in range(n + 1)
            ]
        u = [1 if c <= 1 else power[c] for c in range(n + 1)]
    return u[n]


def enumerate_trees(
    n: int, d: int, max_depth: int, budget: int = 2_000_000
) -> Iterator[CountTree]:
    """Every resolved occupancy tree of depth <= max_depth, each exactly once.

    Children compositions are generated in lexicographic order.  Refuses with
    a count estimate when the enumeration would exceed ``budget``.
    """
    check_dimension(d)
    total = count_trees(n, d, max_depth)
    if total > budget:
        raise OracleBudgetError(
            f"enumeration of n={n}, d={d}, depth<={max_depth} has {total} trees "
            f"> budget {budget}"
        )
    offs = child_offsets(d)
    cells = 1 << d

    def fragments(c: int, level: int, coords) -> Iterator[dict]:
        """Node maps for the subtree below a cube holding c points."""
        if c <= 1:
            yield {}
            return
        if level >= max_depth:
            return
        for comp in compositions(c, cells):
            entries = [
                (child_coords(coords, offs[j]), comp[j])
                for j in range(cells)
                if comp[j]
            ]

            def expand(idx: int) -> Iterator[dict]:
                if idx == len(entries):
                    yield {}
                    return
                cc, ci = entries[idx]
                for frag in fragments(ci, level + 1, cc):
                    head = {(level + 1, cc): ci, **frag}
                    for rest in expand(idx + 1):
                        yield {**head, **rest}

            yield from expand(0)

    root = (0,) * d
    for nodes in fragments(n, 0, root):
        yield CountTree(d, n, nodes)


# -- independent minimum-energy search --------------------------------------

_MIN_CACHE: dict = {}  # d -> (phi list, argmin partition lists)


def _min_energy_dp(d: int, n_max: int) -> tuple[list, list]:
    phi, argmins = _MIN_CACHE.get(d, ([0, 0], [[], []]))
    scale = 1 << (d - 2)
    cells = 1 << d
    for c in range(len(phi), n_max + 1):
        best = None
        best_parts: list[tuple] = []
        for mu in partitions_at_most(c, cells):
            if len(mu) == 1:  # postponed split, never optimal for c >= 2
                continue
            val = c * c - sum(p * p for p in mu) + scale * sum(phi[p] for p in mu)
            if best is None or val < best:
                best, best_parts = val, [mu]
            elif val == best:
                best_parts.append(mu)
        phi.append(best)
        argmins.append(best_parts)
    _MIN_CACHE[d] = (phi, argmins)
    return phi, argmins


def min_energy_value(n: int, d: int) -> int:
    """Exact minimum energy over all resolved trees, by exhaustive partition DP."""
    check_dimension(d)
    if n < 0:
        raise ValueError("n must be non-negative")
    phi, _ = _min_energy_dp(d, n)
    return phi[n]


def argmin_partitions(n: int, d: int) -> list[tuple]:
    """All child-count multisets (as non-increasing tuples) achieving the minimum."""
    check_dimension(d)
    _, argmins = _min_energy_dp(d, n)
    return list(argmins[n])


def _arrangements(mu: tuple, cells: int) -> int:
    """Ordered placements of multiset ``mu`` (padded with zeros) into ``cells`` slots."""
    counts: dict[int, int] = {0: cells - len(mu)}
    for p in mu:
        counts[p] = counts.get(p, 0) + 1
    out = math.factorial(cells)
    for c in counts.values():
        out //= math.factorial(c)
    return out


def count_min_energy_trees(n: int, d: int) -> int:
    """Number of distinct resolved trees attaining the minimum energy."""
    check_dimension(d)
    phi, argmins = _min_energy_dp(d, n)
    cells = 1 << d
    memo = {0: 1, 1: 1}

    def t(c: int) -> int:
        if c not in memo:
            memo[c] = sum(
                _arrangements(mu, cells) * math.prod(t(p) for p in mu)
                for mu in argmins[c]
            )
        return memo[c]

    return t(n)


def count_min_energy_patterns(n: int, d: int) -> int:
    """Occupied-cell patterns at level base_level(n) over all minimum-energy trees.

    Expands each count-1 leaf at level l into its 2^{d (h_n - l)} base cells;
    independent of the balanced-split characterization.
    """
    check_dimension(d)
    _, argmins = _min_energy_dp(d, n)
    cells = 1 << d

    memo: dict = {}

    def pat(c: int, lev: int) -> int:
        if c == 0:
            return 1
        if c == 1:
            return 1 << (d * lev)
        if lev == 0:
            return 0
        key = (c, lev)
        if key not in memo:
            memo[key] = sum(
                _arrangements(mu, cells) * math.prod(pat(p, lev - 1) for p in mu)
                for mu in argmins[c]
            )
        return memo[key]

    return pat(n, base_level(n, d))


def iter_min_energy_trees(n: int, d: int) -> Iterator[CountTree]:
    """All minimum-energy resolved trees, via the argmin partition structure."""
    check_dimension(d)
    _, argmins = _min_energy_dp(d, n)
    offs = child_offsets(d)
    cells = 1 << d

    def distinct_comps(mu: tuple) -> Iterator[tuple]:
        padded = tuple(mu) + (0,) * (cells - len(mu))
        seen = set()
        for perm in set(_permutations_of(padded)):
            if perm not in seen:
                seen.add(perm)
                yield perm

    memo: dict[int, list] = {}

    def subtrees(c: int) -> list:
        """Standalone CountTrees of c points rooted at level 0."""
        if c <= 1:
            return [CountTree(d, c, {})]
        if c not in memo:
            out = []
            for mu in argmins[c]:
                for comp in sorted(distinct_comps(mu)):
                    child_sets = [subtrees(ci) if ci else [None] for ci in comp]
                    for combo in product(*child_sets):
                        nodes = {}
                        for j, sub in enumerate(combo):
                            if comp[j] == 0:
                                continue
                            cc = child_coords((0,) * d, offs[j])
                            nodes[(1, cc)] = comp[j]
                            nodes.update(shift_tree(sub, 1, cc))
                        out.append(CountTree(d, c, nodes))
            memo[c] = out
        return memo[c]

    yield from subtrees(n)


def _permutations_of(items: tuple) -> Iterator[tuple]:
    from itertools import permutations

    return permutations(items)


def brute_min_energy(n: int, d: int, budget: int = 300_000) -> tuple[int, list]:
    """(minimum energy, all minimizing trees); errors when the set exceeds budget."""
    check_dimension(d)
    total = count_min_energy_trees(n, d)
    if total > budget:
        raise OracleBudgetError(
            f"minimizer set for n={n}, d={d} has {total} trees > budget {budget}"
        )
    return min_energy_value(n, d), list(iter_min_energy_trees(n, d))


# -- direct integration of the level-1 count distribution --------------------


def _multinomial(comp: tuple) -> int:
    out = math.factorial(sum(comp))
    for c in comp:
        out //= math.factorial(c)
    return out


def exact_count_distribution(
    n: int, beta: float, d: int, tail_tol: float = 1e-12, max_cutoff: int = 64
) -> dict:
    """Probability of each level-1 composition, by exhaustive level recursion.

    Z(m, B) is bracketed recursively: below the cutoff level every unresolved
    Z(m >= 2, B) lies in [0, e^{-B phi(m)}] since the energy of m points in a
    cube is at least phi(m).  The cutoff is deepened until every composition
    probability is pinned to within ``tail_tol``.
    """
    check_dimension(d)
    if n > 6:
        raise OracleBudgetError(f"exact_count_distribution supports n <= 6, got {n}")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    phi, _ = _min_energy_dp(d, n)
    cells = 1 << d
    comps = list(compositions(n, cells))

    def distribution(cutoff: int) -> tuple[dict, float]:
        memo: dict = {}

        def z_bracket(m: int, level: int) -> tuple[float, float]:
            if m <= 1:
                return 1.0, 1.0
            if level >= cutoff:
                hi = math.exp(-beta * (2.0 ** ((d - 2) * level)) * phi[m])
                return 0.0, hi
            key = (m, level)
            if key in memo:
                return memo[key]
            b_here = beta * (2.0 ** ((d - 2) * level))
            lo = hi = 0.0
            vol = 2.0 ** (-d * m)
            for comp in compositions(m, cells):
                w = _multinomial(comp) * vol
                cross = m * m - sum(c * c for c in comp)
                w *= math.exp(-b_here * cross)
                if w == 0.0:
                    continue
                plo = phi_ = 1.0
                for c in comp:
                    clo, chi = z_bracket(c, level + 1)
                    plo *= clo
                    phi_ *= chi
                lo += w * plo
                hi += w * phi_
            memo[key] = (lo, hi)
            return lo, hi

        term_lo = {}
        term_hi = {}
        b0 = beta
        vol = 2.0 ** (-d * n)
        for comp in comps:
            w = _multinomial(comp) * vol
            cross = n * n - sum(c * c for c in comp)
            w *= math.exp(-b0 * cross)
            plo = phi_ = 1.0
            for c in comp:
                clo, chi = z_bracket(c, 1)
                plo *= clo
                phi_ *= chi
            term_lo[comp] = w * plo
            term_hi[comp] = w * phi_
        z_lo = sum(term_lo.values())
        z_hi = sum(term_hi.values())
        if z_lo <= 0.0:
            return {}, math.inf
        probs = {}
        width = 0.0
        for comp in comps:
            p_lo = term_lo[comp] / z_hi
            p_hi = term_hi[comp] / z_lo
            probs[comp] = 0.5 * (p_lo + p_hi)
            width = max(width, p_hi - p_lo)
        return probs, width

    cutoff = 12
    while cutoff <= max_cutoff:
        probs, width = distribution(cutoff)
        if width < tail_tol:
            total = sum(probs.values())
            assert abs(total - 1.0) < 1e-9, total
            return probs
        cutoff += 8
    raise OracleBudgetError(
        f"count distribution did not stabilize below cutoff {max_cutoff}"
    )
