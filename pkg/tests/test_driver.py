import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab.driver import (
    DriverPath,
    TimeGrid,
    brownian_batch,
    read_driver_csv,
    refine,
    sample_brownian,
    scale_driver,
    write_driver_csv,
)


def test_grid_nodes_pinned():
    g = TimeGrid(t1=0.7, n_steps=3, t0=0.1)
    nodes = g.nodes
    assert nodes[0] == 0.1 and nodes[-1] == 0.7
    assert np.all(np.diff(nodes) > 0)
    assert g.index_of(0.3) == 1
    with pytest.raises(ValueError):
        g.index_of(0.25)


@pytest.mark.parametrize("t0,t1,n", [(0.0, 0.0, 4), (1.0, 0.5, 4), (0.0, 1.0, 0), (0.0, 1.0, 2.5)])
def test_grid_rejects_degenerate(t0, t1, n):
    with pytest.raises(ValueError):
        TimeGrid(t1=t1, n_steps=n, t0=t0)


def test_sample_starts_at_zero_and_is_deterministic():
    g = TimeGrid(1.0, 4)
    a, b = sample_brownian(g, 42), sample_brownian(g, 42)
    assert a.values[0] == 0.0
    assert a.kappa == 0.0
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_brownian(g, 43).values)


def test_values_are_read_only():
    path = sample_brownian(TimeGrid(1.0, 8), 1)
    with pytest.raises(ValueError):
        path.values[1] = 3.0


def test_driver_validation():
    g = TimeGrid(1.0, 2)
    with pytest.raises(ValueError):
        DriverPath(g, [0.0, 1.0])
    with pytest.raises(ValueError):
        DriverPath(g, [1.0, 1.0, 1.0])


def test_variance_of_endpoint_over_seeds():
    g = TimeGrid(1.0, 16)
    ends = brownian_batch(g, 2024, 10_000)[:, -1]
    var = ends.var(ddof=1)
    # standard error of a sample variance of N(0, 1) draws
    se = math.sqrt(2.0 / (ends.size - 1))
    assert abs(var - 1.0) < 3 * se


def test_half_interval_increments_uncorrelated():
    g = TimeGrid(1.0, 2)
    W = brownian_batch(g, 77, 10_000)
    first, second = W[:, 1], W[:, 2] - W[:, 1]
    assert abs(np.corrcoef(first, second)[0, 1]) < 3 / math.sqrt(10_000)


def test_batch_rows_do_not_depend_on_chunking():
    g = TimeGrid(1.0, 32)
    whole = brownian_batch(g, 5, 10)
    parts = np.vstack([brownian_batch(g, 5, 4, 0), brownian_batch(g, 5, 6, 4)])
    assert np.array_equal(whole, parts)


def test_scale_driver():
    B = sample_brownian(TimeGrid(1.0, 64), 3)
    assert np.all(scale_driver(B, 0.0).values == 0.0)
    assert np.array_equal(scale_driver(B, 4.0).values, 2.0 * B.values)
    two = scale_driver(B, 2.0)
    assert np.array_equal(two.values, math.sqrt(2.0) * B.values)
    assert two.kappa == 2.0
    with pytest.raises(ValueError):
        scale_driver(two, 2.0)
    with pytest.raises(ValueError):
        scale_driver(B, -1.0)


@given(st.floats(0.01, 10.0), st.integers(0, 2**32 - 1))
def test_scaling_round_trip(kappa, seed):
    B = sample_brownian(TimeGrid(1.0, 16), seed)
    back = scale_driver(B, kappa).values / math.sqrt(kappa)
    np.testing.assert_allclose(back, B.values, rtol=1e-15, atol=1e-15)


def test_refine_identity_and_pinning():
    B = sample_brownian(TimeGrid(1.0, 16), 9)
    assert refine(B, 1, 0) is B
    fine = refine(B, 4, 10)
    assert fine.grid.n_steps == 64
    assert np.array_equal(fine.values[::4], B.values)
    assert np.array_equal(refine(B, 4, 10).values, fine.values)
    with pytest.raises(ValueError):
        refine(scale_driver(B, 2.0), 2, 0)
    with pytest.raises(ValueError):
        refine(B, 0, 0)


def test_bridge_midpoint_variance():
    g = TimeGrid(1.0, 1)
    dt_fine = 0.5
    resid = []
    for seed in range(10_000):
        B = DriverPath(g, [0.0, 0.3])
        mid = refine(B, 2, seed).values[1]
        resid.append(mid - 0.15)
    resid = np.array(resid)
    # midpoint of a bridge over [0, 1] has variance dt_coarse / 4 with dt_coarse = 1
    target = 2 * dt_fine / 4
    se = target * math.sqrt(2.0 / (resid.size - 1))
    assert abs(resid.var(ddof=1) - target) < 3 * se


def test_csv_round_trip(tmp_path):
    B = scale_driver(sample_brownian(TimeGrid(1.0, 8), 11), 2.0)
    target = tmp_path / "driver.csv"
    write_driver_csv(B, target)
    text = target.read_text().splitlines()
    assert text[0].startswith("# kappa=2.0 seed=11")
    assert text[1] == "t,U"
    back = read_driver_csv(target)
    assert np.array_equal(back.values, B.values)
    assert back.kappa == 2.0 and back.seed == 11 and back.is_scaled
