import math

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from slelab.exponents import (
    continuity_condition,
    critical_r,
    exponent_record,
    field_exponents,
    grr_config,
    lambda_zeta,
    optimal_grr_exponents,
    refine_grr_exponents,
    trace_regularity,
)


@pytest.mark.parametrize("kappa,expected", [(8, 1.0), (2, 2.5), (8 / 3, 2.0)])
def test_critical_r(kappa, expected):
    assert critical_r(kappa) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("kappa", [0.0, -1.0])
def test_critical_r_rejects_nonpositive(kappa):
    with pytest.raises(ValueError):
        critical_r(kappa)


def test_lambda_zeta_values():
    p = lambda_zeta(2, 2.5, allow_boundary=True)
    assert (p.lambda_, p.zeta, p.boundary) == (2.1875, 0.9375, True)
    assert lambda_zeta(2, 0.0).lambda_ == 0.0 and lambda_zeta(2, 0.0).zeta == 0.0
    q = lambda_zeta(8 / 3, 1.0)
    assert q.lambda_ == pytest.approx(4 / 3, rel=1e-15)
    assert q.zeta == pytest.approx(2 / 3, rel=1e-15)


def test_lambda_zeta_rejects_critical_and_beyond():
    with pytest.raises(ValueError):
        lambda_zeta(2, 2.5)
    with pytest.raises(ValueError):
        lambda_zeta(2, 3.0, allow_boundary=True)


@given(st.floats(0.1, 20.0), st.floats(0.0, 1.0))
def test_sum_identity(kappa, frac):
    r = frac * critical_r(kappa) * 0.999
    p = lambda_zeta(kappa, r)
    rhs = (kappa / 4) * r * (1 + 8 / kappa - r)
    assert p.zeta + p.lambda_ == pytest.approx(rhs, rel=1e-12, abs=1e-14)
    if r > 0:
        assert p.zeta < p.lambda_


@given(st.floats(0.1, 20.0))
def test_lambda_at_critical_r(kappa):
    p = lambda_zeta(kappa, critical_r(kappa), allow_boundary=True)
    assert p.lambda_ == pytest.approx(1 + 2 / kappa + 3 * kappa / 32, rel=1e-14)


def test_continuity_condition_values():
    assert abs(continuity_condition(8 / 3)) < 1e-12
    assert continuity_condition(2) == pytest.approx(-0.16, abs=1e-14)
    assert round(continuity_condition(3), 4) == 0.0661


def test_continuity_condition_single_root():
    grid = [0.05 * k for k in range(1, 160)]
    signs = [continuity_condition(k) < 0 for k in grid]
    assert sum(a != b for a, b in zip(signs, signs[1:])) == 1
    root = brentq(continuity_condition, 0.5, 7.9, xtol=1e-14)
    assert abs(root - 8 / 3) < 1e-9


def test_optimal_symmetric():
    c = optimal_grr_exponents((4, 4), (4, 4), (4, 4), (4, 4))
    assert c.a == pytest.approx(1) and c.b == pytest.approx(1)
    assert c.exponent_1 == pytest.approx(0.25) and c.exponent_2 == pytest.approx(0.25)


def test_optimal_equal_beta_closed_form():
    c = optimal_grr_exponents(2, 4, 4, 5)
    assert c.a == pytest.approx(1) and c.b == pytest.approx(1)
    assert c.exponent_1 == pytest.approx(0.5) and c.exponent_2 == pytest.approx(0.5)


def test_inadmissible_names_inequality():
    with pytest.raises(ValueError, match=r"\(beta_1 - 2\)\(beta_2 - 2\) = 0.25"):
        optimal_grr_exponents(2, 2, 2.5, 2.5)
    with pytest.raises(ValueError, match="beta"):
        optimal_grr_exponents(2, 2, 1.5, 6)
    with pytest.raises(ValueError, match="q_ij"):
        optimal_grr_exponents(0.5, 2, 4, 4)


qs = st.floats(1.0, 8.0)
betas = st.floats(2.05, 8.0)


@given(qs, qs, qs, betas, betas)
def test_equal_beta_balancing(q11, q12, q2, b1, b2):
    if (b1 - 2) * (b2 - 2) <= 1.01:
        return
    c = optimal_grr_exponents((q11, q12), q2, (b1, b1), b2)
    g1 = [g[0] for g in c.gamma_1]
    g2 = [g[0] for g in c.gamma_2]
    assert min(g1) == pytest.approx(min(g2), rel=1e-9, abs=1e-12)
    assert min(g[1] for g in c.gamma_1) == pytest.approx(min(g[1] for g in c.gamma_2), rel=1e-9, abs=1e-12)
    Q1, Q2 = max(q11, q12), q2
    num = (b1 - 2) * (b2 - 2) - 1
    assert c.exponent_1 == pytest.approx(num / (Q1 * (b2 - 2) + Q2), rel=1e-9)
    assert c.exponent_2 == pytest.approx(num / (Q2 * (b1 - 2) + Q1), rel=1e-9)


@given(qs, betas)
def test_symmetric_case_gives_unit_a_b(q, b):
    if (b - 2) ** 2 <= 1.01:
        return
    c = optimal_grr_exponents(q, q, b, b)
    assert c.a == pytest.approx(1.0) and c.b == pytest.approx(1.0)


def test_gamma_formulas():
    c = grr_config((2, 3), (4,), (5, 6), (7,), 0.7, 1.3)
    assert c.gamma_1[0] == pytest.approx(((5 - 2 - 1.3) / 2, ((5 - 2) * 0.7 - 1) / 2))
    assert c.gamma_1[1] == pytest.approx(((6 - 2 - 1.3) / 3, ((6 - 2) * 0.7 - 1) / 3))
    assert c.gamma_2[0] == pytest.approx((((7 - 2) * 1.3 - 1) / 4, (7 - 2 - 0.7) / 4))


def test_general_case_formulas():
    b11, b12, b2 = 4.0, 5.0, 6.0
    c = optimal_grr_exponents((2, 3), 2, (b11, b12), b2)
    B1, B2 = 4.0, 6.0
    assert c.a == pytest.approx((B2 - 1) / (B1 - 1))
    for (g1, g2), q, b in zip(c.gamma_1, (2, 3), (b11, b12)):
        num = (b - 2) * (B2 - 2) - 1 + b - B1
        assert g1 == pytest.approx(num / (q * (B2 - 1)))
        assert g2 == pytest.approx(num / (q * (B1 - 1)))


def test_refinement_never_worse():
    c = optimal_grr_exponents((2, 3), 2, (4.0, 5.0), 6.0)
    r = refine_grr_exponents(c)
    assert min(r.exponent_1, r.exponent_2) >= min(c.exponent_1, c.exponent_2) - 1e-12


def test_trace_regularity():
    assert trace_regularity(2)["p_var_exponent"] == 1.25
    assert trace_regularity(16)["p_var_exponent"] == 2.0
    assert trace_regularity(1e-9)["holder_exponent_bound"] == pytest.approx(0.5)
    for k in (0.5, 3.0, 6.0, 8.0):
        assert trace_regularity(k)["p_var_exponent"] == min(1 + k / 8, 2)


def test_field_exponents_positive_and_below_range():
    fe = field_exponents(2.5)
    assert 0 < fe["alpha"] < 0.5 and 0 < fe["eta"] < 1
    assert fe["params"].r == pytest.approx(critical_r(2.5) - 0.01)
    with pytest.raises(ValueError):
        field_exponents(3.0)


def test_record():
    rec = exponent_record(2.0, r=1.0)
    assert rec["r_c"] == 2.5 and rec["p_var_exponent"] == 1.25
    assert rec["lambda"] == 1.25 and rec["zeta"] == 0.75
    assert rec["jointly_continuous"]
    assert "field_alpha" not in exponent_record(3.0)
    assert math.isclose(rec["lambda_at_r_c"], 2.1875)
