from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcgas.numtheory import (
    DigitVector,
    DimConstant,
    DimensionError,
    base_level,
    digits_base,
    gamma,
)
from hcgas.verify import gamma_growth_constant


def test_digits_examples():
    assert digits_base(9, 3).digits == (1, 1)
    assert digits_base(8, 3).digits == (0, 1)
    assert digits_base(0, 3).digits == ()
    assert digits_base(0, 3).value() == 0


def test_digit_vector_invariants():
    dv = digits_base(123456, 4)
    assert all(0 <= c < 16 for c in dv.digits)
    assert dv.digits[-1] > 0
    assert dv.value() == 123456
    with pytest.raises(ValueError):
        DigitVector(digits=(1, 0), base=8)
    with pytest.raises(ValueError):
        DigitVector(digits=(8,), base=8)


def test_dimension_validation():
    with pytest.raises(DimensionError):
        digits_base(5, 2)
    with pytest.raises(DimensionError):
        gamma(5, 17)
    with pytest.raises(ValueError):
        digits_base(-1, 3)


def test_dim_constant():
    assert DimConstant.for_dimension(3).c_d == Fraction(1, 3)
    assert DimConstant.for_dimension(4).c_d == Fraction(1, 2)
    assert DimConstant.for_dimension(5).c_d == Fraction(7, 12)


def test_gamma_examples():
    assert gamma(8, 3) == 2
    assert gamma(9, 3) == 3
    assert gamma(7, 3) == 7
    assert gamma(0, 3) == 0


def test_base_level_examples():
    assert base_level(1, 3) == 0
    assert base_level(8, 3) == 1
    assert base_level(9, 3) == 2
    assert base_level(0, 3) == 0


@pytest.mark.parametrize("d", [3, 4, 5, 16])
def test_base_level_exact_integer_comparison(d):
    for h in range(1, 5):
        edge = 1 << (d * h)
        assert base_level(edge, d) == h
        assert base_level(edge + 1, d) == h + 1


@given(st.integers(min_value=0, max_value=10**12), st.sampled_from([3, 4, 5, 8]))
@settings(max_examples=200)
def test_digit_round_trip(n, d):
    assert digits_base(n, d).value() == n


@given(
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=0, max_value=10**6),
    st.sampled_from([3, 4, 5]),
)
@settings(max_examples=300)
def test_gamma_subadditive(n, r, d):
    assert gamma(n + r, d) <= gamma(n, d) + gamma(r, d)


def test_gamma_single_step_exhaustive():
    for d in (3, 4):
        prev = 0
        for m in range(1, 50_000):
            cur = gamma(m, d)
            assert cur <= prev + 1
            prev = cur


@pytest.mark.parametrize("d", [3, 4, 5])
def test_gamma_growth_with_provable_constant(d, rng):
    # geometric-series constant; the often-quoted 4 only holds as d -> infinity
    c = gamma_growth_constant(d)
    for n in rng.integers(1, 10**6, size=5_000).tolist():
        assert gamma(n, d) <= c * n ** ((d - 2) / d) * (1 + 1e-9)
    worst = 1 << (d * 5)
    assert gamma(worst - 1, d) <= c * (worst - 1) ** ((d - 2) / d) * (1 + 1e-9)


def test_gamma_lower_bound_from_subadditivity():
    # concavity gives gamma(n) >= n^{(d-2)/d}; spot check it
    for d in (3, 4, 5):
        for n in (1, 7, 63, 1000, 12345):
            assert gamma(n, d) >= n ** ((d - 2) / d) * (1 - 1e-12)
