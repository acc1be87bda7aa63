import math

import numpy as np
import pytest
from scipy import stats

from slelab.verify import (
    MEDIAN_OF_MEANS,
    PLAIN,
    MonteCarloError,
    bessel_compare,
    bessel_paths,
    check_f_diffkappa,
    check_fprime_moment,
    check_h_diff_pathwise,
    estimate_moment,
    fit_scaling,
    moment_from_samples,
    pathwise_difference,
    reparam_check,
    reparam_integrals,
    reparametrize,
)
from slelab.loewner import reverse_batch


# ---------------------------------------------------------------- moments


def test_constant_sample_moment():
    est = estimate_moment(lambda rng: 2.0, 3, 100, seed=0)
    assert est.mean_estimate == 8.0 and est.std_error == 0.0


@pytest.mark.parametrize("p,exact", [(2, 1.0), (1, math.sqrt(2 / math.pi))])
def test_normal_moments(p, exact):
    est = estimate_moment(lambda rng: rng.standard_normal(), p, 10**5, seed=1, estimator=PLAIN)
    assert abs(est.mean_estimate - exact) < 0.01
    mom = estimate_moment(lambda rng: rng.standard_normal(), p, 10**5, seed=1)
    assert mom.estimator == MEDIAN_OF_MEANS and abs(mom.mean_estimate - exact) < 0.02


def test_nonfinite_abort():
    x = np.ones(100)
    x[:2] = np.nan
    with pytest.raises(MonteCarloError):
        moment_from_samples(x, 1)
    x[1] = 1.0
    assert moment_from_samples(x, 1).n_nonfinite == 1


def test_invalid_order():
    with pytest.raises(ValueError):
        moment_from_samples(np.ones(10), 0.5)


def test_fit_exact_power_law():
    xs = [1.0, 2.0, 4.0, 8.0]
    fit = fit_scaling(xs, [x**2 for x in xs])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.slope_ci_halfwidth == 0.0
    assert fit_scaling(xs, [3.0] * 4).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_scaling([1.0, 1.0, 2.0], [1.0, 1.0, 2.0])


def test_fit_interval_coverage():
    # |N(0, y^3)| has E|X|^1 proportional to y^1.5
    xs = np.array([0.1, 0.2, 0.4, 0.8])
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        ests = [moment_from_samples(rng.standard_normal(2000) * x**1.5, 1, PLAIN) for x in xs]
        hits += fit_scaling(xs, ests).contains(1.5)
    assert hits >= 95


def test_chunking_does_not_change_estimate():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(1000)
    a = moment_from_samples(x, 2)
    b = moment_from_samples(np.concatenate([x[:300], x[300:]]), 2)
    assert a == b


# ---------------------------------------------------------------- checks


def test_fprime_small_run_and_threads():
    kw = dict(kappa=2.0, r=1.0, t=1.0, y_list=[0.05, 0.1, 0.2], n=200, seed=3, n_steps=128)
    a = check_fprime_moment(**kw, chunk=50)
    b = check_fprime_moment(**kw, chunk=70, threads=3)
    assert a.results["fit"] == b.results["fit"]
    assert a.results["zeta"] == 0.75


def test_fprime_rejects_bad_inputs():
    with pytest.raises(ValueError):
        check_fprime_moment(2.0, 3.0, 1.0, [0.1, 0.2, 0.4], 10, 0)
    with pytest.raises(ValueError):
        check_fprime_moment(2.0, 1.0, 1.0, [0.1, 0.11, 0.12], 10, 0)


def test_diffkappa_equal_kappa_is_zero():
    rep = check_f_diffkappa(2.0, [2.0, 2.2, 2.4, 2.6], 1.0, 0.1, 0.0, 2.0, 100, 1, n_steps=64)
    assert rep.criteria["equal_kappa_zero"]
    assert rep.results["estimates"][0]["plain"]["mean_estimate"] == 0.0
    assert "fit" in rep.results


def test_diffkappa_validation():
    with pytest.raises(ValueError):
        check_f_diffkappa(2.0, [2.5], 1.0, 0.1, 0.2, 2.0, 10, 0)
    with pytest.raises(ValueError):
        check_f_diffkappa(2.0, [2.5], 1.0, 0.1, 0.0, 0.5, 10, 0)


def test_pathwise_identical_drivers():
    V = np.cumsum(np.random.default_rng(0).standard_normal((3, 65)), axis=1) * 0.1
    lhs, rhs = pathwise_difference(V, V, 1 / 64, 0.3 + 0.5j)
    assert np.all(lhs == 0) and np.all(rhs == 0)


def test_pathwise_constant_offset():
    V1 = np.zeros(257)
    V2 = np.full(257, 0.1)
    lhs, rhs = pathwise_difference(V1, V2, 1 / 256, 1j)
    assert 0 < lhs <= rhs
    assert math.isfinite(rhs)


def test_hdiff_small_run():
    rep = check_h_diff_pathwise(2.0, 3.0, 0.2 + 0.5j, 1.0, 50, 2, n_steps=128)
    assert rep.passed and rep.results["violations"] == 0
    same = check_h_diff_pathwise(2.0, 2.0, 1j, 1.0, 10, 2, n_steps=64)
    assert same.results["max_ratio"] == 0.0


def test_bessel_equal_kappa_identical():
    rep = bessel_compare(2.0, 2.0, 1.0, 0.5, 50, 4, dt=1e-2)
    assert rep.results["identical_paths"] and rep.results["violations"] == 0


def test_bessel_ordering_small_run():
    rep = bessel_compare(2.0, 3.0, 0.5, 1.0, 200, 5, dt=1e-3)
    assert rep.criteria["no_ordering_violations"] and rep.criteria["stable"]


def test_bessel_rejects_small_kappa():
    with pytest.raises(ValueError):
        bessel_compare(0.2, 0.3, 1.0, 1.0, 10, 0)


def test_bessel_paths_zero_noise_matches_ode():
    # dX = (2/kappa)/X dt has X_t = sqrt(x0^2 + 4 t / kappa)
    dt = 1e-5
    res = bessel_paths([2.0], 1.0, np.zeros((1, 100000)), dt)
    assert res["final"][0, 0] == pytest.approx(math.sqrt(1 + 2.0), rel=1e-4)


def test_reparam_zero_path():
    B = np.zeros(257)
    out = reparam_integrals(B, B, 2.0, 0.5, 1.0)
    assert out["original"] == 0.0 and out["time_changed"] == 0.0
    assert out["bound_holds"] and out["sigma_increasing"]


def test_reparametrize_deterministic_flow():
    # zero driver at rate a: y_r = sqrt(1 + 2 a r), sigma(s) = (e^{2as} - 1) / (2a)
    a, dt = 1.0, 1e-3
    Z, _ = reverse_batch(np.zeros(4001), dt, 1j, rate=a)
    st = reparametrize(Z, dt, a, n_s=257)
    expected = np.expm1(2 * a * st.s) / (2 * a)
    np.testing.assert_allclose(st.sigma, expected, rtol=2e-3, atol=1e-6)


def test_reparam_small_run():
    rep = reparam_check(2.0, 0.5, 1.0, 200, 7, n_steps=256)
    assert rep.criteria["sigma_bound_all_paths"]
    assert rep.results["attempts"][0]["p_value"] > 0


def test_ks_negative_control():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(2000)
    assert stats.ks_2samp(a, 1.1 * a + 0.3).pvalue < 0.01


def test_report_write(tmp_path):
    rep = check_h_diff_pathwise(2.0, 2.5, 1j, 1.0, 5, 1, n_steps=32)
    files = rep.write(tmp_path)
    assert [f.name for f in files] == ["h_diff_pathwise.json", "h_diff_pathwise.csv"]
