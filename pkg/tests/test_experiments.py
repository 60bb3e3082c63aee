import json
import math

import numpy as np
import pytest

from hcgas.dyadic import PointConfiguration
from hcgas.experiments import (
    STATISTICS,
    BallRegion,
    BoxRegion,
    CubeRegion,
    ExperimentRow,
    LinearStatistic,
    count_in_region,
    estimate_variance,
    estimate_variances,
    fit_exponent,
    linear_statistic_value,
    poisson_baseline,
    summary_json,
    verify_lipschitz,
    write_rows_csv,
)


def uniform_words(rng, n, d=3):
    return rng.integers(0, np.iinfo(np.uint64).max, size=(n, d), dtype=np.uint64, endpoint=True)


def test_count_full_cube(rng):
    words = uniform_words(rng, 50)
    assert CubeRegion(level=0, coords=(0, 0, 0)).count(words) == 50


def test_count_level1_binomial(rng):
    cube = CubeRegion(level=1, coords=(0, 1, 0))
    n, reps = 400, 300
    counts = [cube.count(uniform_words(rng, n)) for _ in range(reps)]
    mean = np.mean(counts)
    se = math.sqrt(n * (1 / 8) * (7 / 8) / reps)
    assert abs(mean - n / 8) < 4 * se


def test_ball_radius_zero(rng):
    ball = BallRegion(center=(0.5, 0.5, 0.5), radius=0.0)
    assert ball.count(uniform_words(rng, 1000)) == 0


def test_ball_validation():
    with pytest.raises(ValueError):
        BallRegion(center=(0.9, 0.5, 0.5), radius=0.2)


def test_ball_volume_and_count(rng):
    ball = BallRegion(center=(0.5, 0.5, 0.5), radius=0.3)
    vol = ball.volume(3)
    assert vol == pytest.approx(4 / 3 * math.pi * 0.027)
    n = 20_000
    hits = ball.count(uniform_words(rng, n))
    se = math.sqrt(n * vol * (1 - vol))
    assert abs(hits - n * vol) < 5 * se


def test_ball_boundary_exactness():
    # a point word on the boundary band runs through rational arithmetic
    ball = BallRegion(center=(0.5, 0.5, 0.5), radius=0.25)
    inside = np.array([[1 << 63, 1 << 63, (1 << 62) + (1 << 40)]], dtype=np.uint64)
    on_edge = np.array([[1 << 63, 1 << 63, 1 << 62]], dtype=np.uint64)  # dist = r exactly
    outside = np.array([[1 << 63, 1 << 63, (1 << 62) - (1 << 40)]], dtype=np.uint64)
    assert ball.count(inside) == 1
    assert ball.count(on_edge) == 1  # closed ball: boundary included
    assert ball.count(outside) == 0


def test_box_region(rng):
    box = BoxRegion(lo=(0.0, 0.25, 0.5), hi=(1.0, 0.5, 0.75))
    assert box.volume(3) == pytest.approx(1.0 * 0.25 * 0.25)
    w = np.array([[123, 1 << 62, (1 << 63) + (1 << 60)]], dtype=np.uint64)
    assert box.count(w) == 1
    w2 = np.array([[123, 1 << 61, (1 << 63)]], dtype=np.uint64)
    assert box.count(w2) == 0


def test_count_in_region_accepts_config():
    cfg = PointConfiguration(points=((1, 2, 3), (1 << 63, 1, 1)), d=3)
    assert count_in_region(cfg, CubeRegion(level=0, coords=(0, 0, 0))) == 2
    assert count_in_region(cfg, CubeRegion(level=1, coords=(1, 0, 0))) == 1


def test_linear_statistics_values(rng):
    words = uniform_words(rng, 100)
    assert linear_statistic_value(words, STATISTICS["one"]) == 100.0
    x1 = linear_statistic_value(words, STATISTICS["coord1"])
    assert 0 < x1 < 100


def test_lipschitz_verification(rng):
    for stat in STATISTICS.values():
        verify_lipschitz(stat, 3, rng)
    liar = LinearStatistic("liar", lambda x: 10 * x[:, 0], lipschitz=1.0)
    with pytest.raises(ValueError):
        verify_lipschitz(liar, 3, rng)


def test_estimate_variance_constant_statistic(get_tables):
    tab = get_tables(16, 1.0, 3, 6)
    row = estimate_variance(STATISTICS["one"], 16, 1.0, 3, reps=120, seed=0, tables=tab)
    assert row.variance == 0.0
    assert row.mean == 16.0
    assert row.var_se == 0.0


def test_estimate_variance_requires_reps(get_tables):
    tab = get_tables(16, 1.0, 3, 6)
    with pytest.raises(ValueError):
        estimate_variance(STATISTICS["one"], 16, 1.0, 3, reps=10, seed=0, tables=tab)


def test_estimate_variances_shared_replicas(get_tables):
    tab = get_tables(64, 1.0, 3, 6)
    cube = CubeRegion(level=1, coords=(0, 0, 0))
    rows = estimate_variances([cube, STATISTICS["coord1"]], 64, 1.0, 3, 150, 3, tables=tab)
    single = estimate_variance(cube, 64, 1.0, 3, 150, 3, tables=tab)
    assert rows[0] == single  # same streams, same values
    assert rows[1].stat == "coord1"


def test_poisson_baseline_binomial():
    cube = CubeRegion(level=1, coords=(0, 0, 0))
    n, reps = 512, 2000
    row = poisson_baseline(n, 3, cube, reps=reps, seed=1)
    p = 1 / 8
    expected = n * p * (1 - p)
    assert abs(row.mean - n * p) < 4 * math.sqrt(expected / reps)
    assert abs(row.variance - expected) < 6 * row.var_se
    assert row.beta == 0.0


def test_poisson_baseline_linear_statistic():
    row = poisson_baseline(1000, 3, STATISTICS["coord1"], reps=2000, seed=2)
    assert abs(row.mean - 500) < 4 * math.sqrt(1000 / 12 / 2000) * math.sqrt(1000)
    assert abs(row.variance - 1000 / 12) < 6 * row.var_se


def test_beta_zero_sampler_matches_baseline_law(get_tables):
    # the DP sampler at beta = 0 is the i.i.d. uniform law
    tab = get_tables(256, 0.0, 3, 8)
    cube = CubeRegion(level=1, coords=(0, 0, 0))
    row = estimate_variance(cube, 256, 0.0, 3, reps=400, seed=5, tables=tab)
    expected = 256 * (1 / 8) * (7 / 8)
    assert abs(row.variance - expected) < 6 * row.var_se


def test_fit_exponent_synthetic():
    rows = [(n, n ** (2 / 3)) for n in (100, 200, 400, 800, 1600, 3200)]
    fit = fit_exponent(rows)
    assert fit.slope == pytest.approx(2 / 3, abs=1e-12)
    assert fit.slope_se == pytest.approx(0.0, abs=1e-10)
    const = [(n, 7.5) for n in (100, 200, 400, 800, 1600)]
    assert fit_exponent(const).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_exponent_drops_nonpositive():
    rows = [(100, 1.0), (200, 2.0), (400, 0.0), (800, 8.0), (1600, 16.0), (3200, 0.0)]
    with pytest.warns(UserWarning):
        fit = fit_exponent(rows)
    assert fit.slope == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        fit_exponent([(100, 1.0), (200, 2.0)])
    with pytest.raises(ValueError):
        fit_exponent([(n, 0.0) for n in (100, 200, 400, 800, 1600)])


def test_poisson_slope_is_one():
    cube = CubeRegion(level=1, coords=(0, 0, 0))
    rows = [poisson_baseline(n, 3, cube, reps=600, seed=4) for n in (128, 256, 512, 1024, 2048)]
    fit = fit_exponent(rows)
    assert abs(fit.slope - 1.0) < 0.08


def test_csv_and_json_round_trip(tmp_path):
    rows = [
        ExperimentRow(128, 1.0, 3, "cube", 100, 16.0, 0.123456789012345678, 0.01, 7),
        ExperimentRow(256, 1.0, 3, "cube", 100, 32.0, 0.5, 0.02, 7),
    ]
    path = tmp_path / "rows.csv"
    write_rows_csv(path, rows)
    text = path.read_text().splitlines()
    assert text[0] == ExperimentRow.CSV_HEADER
    assert float(text[1].split(",")[6]) == rows[0].variance  # repr round-trips
    blob = json.loads(summary_json(rows, None, {"suite": "hyper"}))
    assert blob["rows"][0]["variance"] == rows[0].variance


def test_thread_pool_matches_serial(get_tables, monkeypatch):
    tab = get_tables(64, 1.0, 3, 6)
    cube = CubeRegion(level=1, coords=(0, 0, 0))
    serial = estimate_variances([cube], 64, 1.0, 3, 120, 9, tables=tab)
    monkeypatch.setenv("HCGAS_THREADS", "2")
    pooled = estimate_variances([cube], 64, 1.0, 3, 120, 9, tables=tab)
    assert pooled == serial
