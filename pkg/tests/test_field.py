import json
import math

import numpy as np
import pytest

from slelab.driver import TimeGrid, sample_brownian, scale_driver
from slelab.field import (
    KappaGrid,
    TraceField,
    default_exponents,
    holder_2d,
    holder_2d_arrays,
    kappa_continuity,
    refinement_stability,
    sample_field,
)
from slelab.loewner import trace


def test_kappa_grid_nodes_and_refinement():
    g = KappaGrid(1.0, 2.0, 5)
    assert g.nodes.tolist() == [1.0, 1.25, 1.5, 1.75, 2.0]
    r = g.refined()
    assert r.n_kappa == 9 and set(g.nodes) <= set(r.nodes)
    assert KappaGrid(2.0, 2.0, 1).nodes.tolist() == [2.0]
    with pytest.raises(ValueError):
        KappaGrid(1.0, 2.0, 1)
    with pytest.raises(ValueError):
        KappaGrid(3.0, 3.0, 1).require_subcritical()


def test_singleton_grid_matches_single_trace():
    B = sample_brownian(TimeGrid(1.0, 128), 5)
    F = sample_field(B, KappaGrid(2.0, 2.0, 1))
    expected = trace(scale_driver(B, 2.0)).gamma
    np.testing.assert_array_equal(F.column(0), expected)


def test_duplicate_nodes_give_identical_columns():
    B = sample_brownian(TimeGrid(1.0, 64), 2)
    F = sample_field(B, KappaGrid(1.5, 1.5 + 1e-300, 2))
    np.testing.assert_array_equal(F.column(0), F.column(1))


def test_threads_do_not_change_result():
    B = sample_brownian(TimeGrid(1.0, 64), 3)
    k = KappaGrid(1.0, 2.5, 4)
    np.testing.assert_array_equal(sample_field(B, k).gamma, sample_field(B, k, threads=3).gamma)


def test_holder_synthetic_sum_field():
    t = np.linspace(0, 1, 11)
    k = np.linspace(0, 1, 6)
    est = holder_2d_arrays(t, k, t[:, None] + k[None, :] + 0j, 1.0, 1.0)
    assert est.constant == pytest.approx(1.0, rel=1e-12)


def test_holder_single_cell_is_zero():
    est = holder_2d_arrays([0.0], [1.0], np.array([[1j]]), 0.5, 0.5)
    assert est.constant == 0.0 and est.argmax is None


def test_holder_sqrt_time():
    t = np.linspace(0, 1, 101)
    g = np.sqrt(t)[:, None] * np.ones((1, 3))
    est = holder_2d_arrays(t, [1.0, 1.5, 2.0], g, 0.5, 0.5)
    assert est.constant == pytest.approx(1.0, rel=1e-12)
    (i, _), (i2, _) = est.argmax
    assert 0 in (i, i2)


def test_holder_monotone_in_subgrid():
    rng = np.random.default_rng(4)
    t = np.linspace(0, 1, 21)
    k = np.linspace(1, 2, 5)
    g = rng.standard_normal((21, 5)) + 1j * rng.standard_normal((21, 5))
    full = holder_2d_arrays(t, k, g, 0.3, 0.3).constant
    sub = holder_2d_arrays(t[::2], k[::2], g[::2, ::2], 0.3, 0.3).constant
    assert sub <= full


def test_holder_matches_brute_force():
    rng = np.random.default_rng(1)
    t = np.linspace(0, 1, 6)
    k = np.array([1.0, 1.3, 2.0])
    g = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    best = 0.0
    for i in range(6):
        for j in range(3):
            for i2 in range(6):
                for j2 in range(3):
                    if (i, j) != (i2, j2):
                        d = abs(t[i] - t[i2]) ** 0.4 + abs(k[j] - k[j2]) ** 0.7
                        best = max(best, abs(g[i, j] - g[i2, j2]) / d)
    assert holder_2d_arrays(t, k, g, 0.4, 0.7).constant == pytest.approx(best, rel=1e-14)


def test_field_holder_and_failed_cells():
    B = sample_brownian(TimeGrid(1.0, 64), 9)
    F = sample_field(B, KappaGrid(1.0, 2.0, 3))
    assert F.n_failed == 0
    g = np.array(F.gamma)
    g[3, 1] = complex(np.nan, np.nan)
    bad = TraceField(F.t_grid, F.k_grid, g, F.y0)
    est = holder_2d(bad, 0.2, 0.2)
    assert est.n_failed == 1 and math.isfinite(est.constant)


def test_refinement_stability_runs():
    B = sample_brownian(TimeGrid(1.0, 64), 11)
    out = refinement_stability(B, KappaGrid(1.0, 2.0, 4), seed=11)
    alpha, eta = default_exponents(2.0)
    assert out["alpha"] == alpha and out["eta"] == eta
    assert out["ratio"] > 0


def test_kappa_continuity_shrinks():
    B = sample_brownian(TimeGrid(1.0, 256), 13)
    d = kappa_continuity(B, 2.0, [0.1, 0.01, 0.001])
    assert d[0] > d[1] > d[2] > 0


def test_to_files(tmp_path):
    B = sample_brownian(TimeGrid(1.0, 8), 1)
    F = sample_field(B, KappaGrid(1.0, 2.0, 2))
    F.to_files(tmp_path / "f.csv", tmp_path / "f.json")
    lines = (tmp_path / "f.csv").read_text().strip().splitlines()
    assert lines[0].endswith("t,kappa,re_gamma,im_gamma")
    assert len([ln for ln in lines if not ln.startswith("#")]) == 1 + 9 * 2
    meta = json.loads((tmp_path / "f.json").read_text())
    assert meta["seed"] == 1 and meta["k_grid"]["n_kappa"] == 2
