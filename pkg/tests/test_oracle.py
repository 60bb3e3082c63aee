import math

import pytest

from hcgas.dyadic import hamiltonian
from hcgas.groundstate import ground_energy, is_ground_state
from hcgas.oracle import (
    OracleBudgetError,
    argmin_partitions,
    brute_min_energy,
    compositions,
    count_min_energy_patterns,
    count_min_energy_trees,
    count_trees,
    enumerate_trees,
    exact_count_distribution,
    min_energy_value,
)
from hcgas.partition_function import build_tables


def test_compositions_count():
    assert len(list(compositions(2, 8))) == math.comb(9, 7)
    assert list(compositions(0, 3)) == [(0, 0, 0)]


def test_count_trees_examples():
    assert count_trees(2, 3, 1) == 28
    assert count_trees(2, 3, 2) == 252
    assert count_trees(1, 3, 5) == 1
    assert count_trees(0, 3, 2) == 1


def test_enumerate_trees_matches_count():
    for n, depth in ((2, 1), (2, 2), (3, 1), (3, 2), (1, 3)):
        trees = list(enumerate_trees(n, 3, depth))
        assert len(trees) == count_trees(n, 3, depth)
        assert len({t.key() for t in trees}) == len(trees)
        for t in trees:
            t.validate()
            assert t.is_resolved()


def test_enumeration_budget():
    with pytest.raises(OracleBudgetError) as err:
        list(enumerate_trees(8, 3, 2, budget=1000))
    assert "trees" in str(err.value)


def test_brute_min_energy_examples():
    val, minimizers = brute_min_energy(9, 3)
    assert val == 74
    assert len(minimizers) == 224
    assert all(hamiltonian(t) == 74 for t in minimizers)
    assert all(is_ground_state(t) for t in minimizers)

    val2, pairs = brute_min_energy(2, 3)
    assert val2 == 2 and len(pairs) == 28

    val1, single = brute_min_energy(1, 3)
    assert val1 == 0 and len(single) == 1 and single[0].nodes == {}


def test_brute_min_budget():
    with pytest.raises(OracleBudgetError):
        brute_min_energy(12, 3, budget=1000)


def test_minimizers_equal_characterization_small():
    # full enumeration cross-check: minimizer set == balanced-split set
    for n in (2, 3, 4, 5):
        depth = 2
        best = min_energy_value(n, 3)
        assert best == ground_energy(n, 3)
        enumerated_min = set()
        characterized = set()
        for t in enumerate_trees(n, 3, depth):
            h = hamiltonian(t)
            assert h >= best
            if h == best:
                enumerated_min.add(t.key())
            if is_ground_state(t):
                characterized.add(t.key())
        assert enumerated_min == characterized
        assert enumerated_min == {t.key() for t in brute_min_energy(n, 3)[1]}


def test_argmin_partitions_are_balanced():
    for d in (3, 4):
        cells = 1 << d
        for n in range(2, 40):
            q, r = divmod(n, cells)
            balanced = tuple(
                c for c in ([q + 1] * r + [q] * (cells - r)) if c > 0
            )
            assert argmin_partitions(n, d) == [balanced]


def test_pattern_count_matches_closed_recursion():
    from hcgas.groundstate import count_ground_states

    for n in range(11):
        assert count_min_energy_patterns(n, 3) == count_ground_states(n, 3)


def test_min_tree_count_consistency():
    assert count_min_energy_trees(2, 3) == 28
    assert count_min_energy_trees(9, 3) == 224
    assert count_min_energy_trees(10, 3) == 21_952
    assert count_min_energy_trees(8, 3) == 1


def test_exact_count_distribution_uniform():
    dist = exact_count_distribution(2, 0.0, 3)
    p_same = sum(p for comp, p in dist.items() if max(comp) == 2)
    assert p_same == pytest.approx(1 / 8, abs=1e-9)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_exact_count_distribution_matches_series():
    beta, d = 0.7, 3
    dist = exact_count_distribution(2, beta, d)
    p_same = sum(p for comp, p in dist.items() if max(comp) == 2)
    num = sum(
        (1 - 2.0**-d) * 2.0 ** (-d * (k - 1)) * math.exp(-2 * beta * 2.0 ** ((d - 2) * (k - 1)))
        for k in range(2, 80)
    )
    den = num + (1 - 2.0**-d) * math.exp(-2 * beta)
    assert p_same == pytest.approx(num / den, abs=1e-10)


def test_exact_count_distribution_matches_dp_conditional():
    # closes the loop: direct integration vs the table-based conditional
    n, beta, d = 4, 1.0, 3
    dist = exact_count_distribution(n, beta, d)
    tables = build_tables(n, beta, d, depth_pad=16)
    import numpy as np

    log_f = tables.Ff[0][: n + 1] - tables.beta_at(0) * tables._A[: n + 1].astype(float)
    comps = list(dist)
    logw = np.array([sum(log_f[c] for c in comp) for comp in comps])
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    for comp, p_dp in zip(comps, w):
        assert dist[comp] == pytest.approx(float(p_dp), abs=1e-8)


def test_budget_on_large_n():
    with pytest.raises(OracleBudgetError):
        exact_count_distribution(7, 1.0, 3)
