import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbm_taylor.algebra import QSqrt3, ScalarMode
from lbm_taylor.quartic import (D2Q9_THERMAL_DEGENERATE, d3q19_closure_residuals, delta_m3, quartic_d1q3_thermal,
                                quartic_d2q5, quartic_d2q5_trt, quartic_d2q9_stokes, quartic_d2q9_thermal,
                                quartic_d2q9_thermal_trt, quartic_d3q7, quartic_d3q19, shear_viscosity_d2q9,
                                shear_viscosity_d3q19)
from lbm_taylor.schemes import make_model, rate_of
from lbm_taylor.taylor import expand

F = Fraction
EXACT = settings(max_examples=15, deadline=None)
sigma_st = st.fractions(min_value=F(1, 20), max_value=F(3), max_denominator=30)
alpha_st = st.fractions(min_value=-3, max_value=F(9, 10), max_denominator=10)


def _fourth(e, dims):
    return [e.A[g][i][j] for g in e.A if sum(g) == 4 for i in range(dims) for j in range(dims)]


def _in_range(*sigmas):
    return all(0 < float(rate_of(s)) < 2 for s in sigmas)


@EXACT
@given(sigma_st, alpha_st)
def test_d1q3_thermal_choice_cancels_fourth_order(sigma1, alpha):
    sigma2 = quartic_d1q3_thermal(sigma1, alpha)
    if not _in_range(sigma1, sigma2):
        return
    e = expand(*make_model("thermal-d1q3", {"s1": rate_of(sigma1), "s2": rate_of(sigma2)}, {"alpha": alpha, "u": 0}), 4)
    assert e.a(0, 0, (4,)) == 0
    assert e.a(0, 0, (2,)) == -sigma1 * alpha


@EXACT
@given(sigma_st, alpha_st)
def test_d2q5_choice_cancels_fourth_order(sigma1, alpha):
    sigma3, sigma4 = quartic_d2q5(sigma1, alpha)
    if not _in_range(sigma1, sigma3, sigma4):
        return
    rates = {"s1": rate_of(sigma1), "s3": rate_of(sigma3), "s4": rate_of(sigma4)}
    assert all(c == 0 for c in _fourth(expand(*make_model("thermal-d2q5", rates, {"alpha": alpha}), 4), 1))


@EXACT
@given(sigma_st, alpha_st)
def test_d3q7_choice_cancels_fourth_order(sigma1, alpha):
    sigma4, sigma6 = quartic_d3q7(sigma1, alpha)
    if not _in_range(sigma1, sigma4, sigma6):
        return
    rates = {"s1": rate_of(sigma1), "s4": rate_of(sigma4), "s6": rate_of(sigma6)}
    assert all(c == 0 for c in _fourth(expand(*make_model("thermal-d3q7", rates, {"alpha": alpha}), 4), 1))


def test_quartic_examples():
    assert quartic_d2q5(F(1, 2), 0) == (F(4, 2) - F(1, 3), F(1, 3))
    r3 = QSqrt3.sqrt3()
    assert quartic_d2q5_trt() == (r3 / 6, r3 / 3)
    assert quartic_d2q9_thermal(F(1, 5)) == (F(38, 51), F(-46, 17))
    assert quartic_d2q9_stokes() == (r3 / 3, r3 / 6)
    assert rate_of(r3 / 6) == 3 - r3
    assert float(rate_of(r3 / 3)) == pytest.approx(4 * math.sqrt(3) - 6)
    with pytest.raises(ValueError, match="singular"):
        quartic_d2q5(F(1, 2), 1)


@pytest.mark.parametrize("sigma", [F(1, 5), F(1, 3), F(1, 10), F(2, 3)])
def test_d2q9_thermal_equal_sigma_choice_cancels_fourth_order(sigma):
    xi, a4 = quartic_d2q9_thermal(sigma)
    rates = {k: rate_of(sigma) for k in ("s1", "s3", "s4", "s5", "s7", "s8")}
    e = expand(*make_model("advective-d2q9", rates, {"xi": xi, "a4": a4}), 4)
    assert all(c == 0 for c in _fourth(e, 1))
    assert e.a(0, 0, (2, 0)) == -xi * sigma


@pytest.mark.parametrize("xi,a4", [(F(1, 3), -1), (F(1, 2), 0), (F(2), F(-7, 2))])
def test_d2q9_thermal_trt_cancels_for_any_equilibrium(xi, a4):
    s1, s3 = quartic_d2q9_thermal_trt()
    rates = {"s1": rate_of(s1), "s5": rate_of(s1), "s3": rate_of(s3), "s4": rate_of(s3), "s7": rate_of(s3),
             "s8": rate_of(s3)}
    e = expand(*make_model("advective-d2q9", rates, {"xi": xi, "a4": a4}, mode=ScalarMode.QUADRATIC), 4)
    assert all(c == 0 for c in _fourth(e, 1))


def test_d2q9_thermal_degenerate_choice_has_no_diffusion():
    sigma = D2Q9_THERMAL_DEGENERATE["sigma"]
    rates = {k: rate_of(sigma) for k in ("s1", "s3", "s4", "s5", "s7", "s8")}
    e = expand(*make_model("advective-d2q9", rates, {"xi": 0, "a4": -1}), 4)
    assert e.a(0, 0, (2, 0)) == 0 and e.a(0, 0, (4, 0)) == 0
    # the cross fourth-order term only vanishes with a4 = 4
    assert e.a(0, 0, (2, 2)) == F(5, 324) * (-1 - 4)
    e = expand(*make_model("advective-d2q9", rates, {"xi": 0, "a4": 4}), 4)
    assert all(b[0][0] == 0 for g, b in e.A.items() if sum(g) >= 2)


# --------------------------------------------------------------- D2Q9 shear mode


def _real_symbol_entry(exp, i, j, kx, ky, dt):
    # conjugation by diag(1, i, i) keeps the determinant and makes every entry real
    total = F(0)
    for g, block in exp.A.items():
        c = block[i][j]
        if c == 0:
            continue
        p = sum(g) + (j > 0) - (i > 0)
        sign = -1 if (p // 2) % 2 else 1
        total += sign * c * dt ** (sum(g) - 1) * kx ** g[0] * ky ** g[1]
    return total


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _dt_coefficient(values, power):
    """Coefficient of dt^power of the polynomial through (dt, value) pairs (exact Lagrange)."""
    xs = [x for x, _ in values]
    total = F(0)
    for a, (xa, ya) in enumerate(values):
        poly = [F(1)]
        den = F(1)
        for b, xb in enumerate(xs):
            if b == a:
                continue
            poly = [F(0)] + poly
            for t in range(len(poly) - 1):
                poly[t] -= xb * poly[t + 1]
            den *= xa - xb
        total += ya * poly[power] / den
    return total


@settings(max_examples=8, deadline=None)
@given(sigma_st, sigma_st, sigma_st, sigma_st, st.integers(-3, 3), st.integers(1, 3), st.sampled_from([F(1), F(2)]))
def test_shear_third_order_term_matches_engine_determinant(s3, s4, s5, s7, kx, ky, lam):
    if not _in_range(s3, s4, s5, s7):
        return
    rates = {"s3": rate_of(s3), "s4": rate_of(s4), "s5": rate_of(s5), "s7": rate_of(s7)}
    e = expand(*make_model("fluid-d2q9", rates, lam=lam), 4)
    kx, ky = F(kx), F(ky)
    pts = []
    for dt in range(1, 11):
        dt = F(dt)
        nu = shear_viscosity_d2q9(s7, lam, dt)
        m = [[_real_symbol_entry(e, i, j, kx, ky, dt) - (nu * (kx * kx + ky * ky) if i == j else 0)
              for j in range(3)] for i in range(3)]
        pts.append((dt, _det3(m)))
    assert _dt_coefficient(pts, 3) == delta_m3(s5, s7, kx, ky, lam)


def test_stokes_choice_cancels_shear_term_and_gives_printed_viscosity():
    s5, s7 = quartic_d2q9_stokes()
    for kx, ky in ((1, 0), (1, 2), (3, -1)):
        assert delta_m3(s5, s7, F(kx), F(ky)) == 0
    assert shear_viscosity_d2q9(float(s7)) == pytest.approx(0.096225, abs=1e-6)
    assert shear_viscosity_d3q19(float(QSqrt3.sqrt3() / 6)) == pytest.approx(0.096225, abs=1e-6)


# --------------------------------------------------------------- D3Q19


def test_d3q19_choice_solves_all_conditions_exactly():
    sol = quartic_d3q19(F(1, 2), F(1, 3))
    res = d3q19_closure_residuals(*(sol.sigmas[k] for k in ("s4", "s5", "s10", "s13", "s14", "s16")))
    assert len(res) == 8 and all(r == QSqrt3(0) for r in res)
    assert all(0 < float(s) < 2 for s in sol.rates.values())
    fl = quartic_d3q19(0.5, 1 / 3, mode=ScalarMode.FLOAT)
    res = d3q19_closure_residuals(*(fl.sigmas[k] for k in ("s4", "s5", "s10", "s13", "s14", "s16")))
    assert max(abs(r) for r in res) < 1e-12
    with pytest.raises(ValueError, match="outside"):
        quartic_d3q19(F(-1, 4), F(1, 3))


def test_d3q19_single_relaxation_time_cannot_solve_conditions():
    grid = np.linspace(0.05, 1.5, 59)
    worst = [max(abs(r) for r in d3q19_closure_residuals(*([s] * 6))) for s in grid]
    assert min(worst) > 1e-3


def test_d3q19_free_rates_do_not_enter():
    a = d3q19_closure_residuals(F(1, 2), F(1, 5), F(1, 4), F(1, 3), F(2, 7), F(3, 8))
    b = d3q19_closure_residuals(F(9, 2), F(1, 5), F(1, 4), F(7), F(2, 7), F(3, 8))
    assert a == b


def test_closure_residuals_alias():
    from lbm_taylor.quartic import appendix_c_residuals
    assert appendix_c_residuals is d3q19_closure_residuals
