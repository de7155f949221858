import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfpwall import exponents as ex

# mpmath findroot at 30 digits
ALPHA_005 = -0.770091421732412101037540465189
ALPHA_01 = -0.724436214918163546209810980207
CSTAR_005 = -3.76697091924554168623426377979
CSTAR_01 = -1.85227515523977476991930638983
KAPPA_1 = -7.84785406107195360816267166117
R_C = 0.1630335348215804648616403561098358374433

GRID = np.logspace(-4, 2, 100)


def test_critical_r_value():
    assert ex.critical_r() == pytest.approx(R_C, rel=1e-15)


def test_critical_r_is_double_root():
    rc = ex.critical_r()
    assert abs(ex.exponent_residual(rc, -2 / 3)) < 1e-12
    assert abs(ex.exponent_residual_deriv(rc, -2 / 3)) < 1e-12


def test_alpha_special_values():
    assert ex.alpha_of_r(1.0) == pytest.approx(0.0, abs=1e-12)
    assert ex.alpha_of_r(ex.critical_r()) == -2 / 3
    assert ex.alpha_of_r(0.5) == pytest.approx(-1 / 3, abs=1e-12)


def test_alpha_golden():
    assert ex.alpha_of_r(0.05) == pytest.approx(ALPHA_005, abs=1e-12)
    assert ex.alpha_of_r(0.1) == pytest.approx(ALPHA_01, abs=1e-12)
    a = ex.alpha_of_r(0.05)
    assert -5 / 6 < a < -2 / 3
    assert abs(0.05 ** (2 + 3 * a) * ex.k_gamma(a) - 1.0) < 1e-12


@pytest.mark.parametrize("r", [0.0, -1.0, math.inf, math.nan])
def test_alpha_domain(r):
    with pytest.raises(ValueError):
        ex.alpha_of_r(r)


def test_alpha_monotone_and_residuals():
    al = np.array([ex.alpha_of_r(r) for r in GRID])
    assert np.all(np.diff(al) > 0)
    assert np.all((al > -5 / 6) & (al < 1 / 6))
    for r, a in zip(GRID, al):
        assert abs(ex.exponent_residual(r, a)) < 1e-10
        assert abs(ex.beta_residual(r, -a - 2 / 3)) < 1e-9


def test_alpha_side_of_critical():
    rc = ex.critical_r()
    for r in GRID:
        a = ex.alpha_of_r(r)
        if r < rc:
            assert a < -2 / 3
        elif r > rc:
            assert a > -2 / 3


def test_alpha_limits():
    assert abs(ex.alpha_of_r(1e-6) + 5 / 6) < 1e-3
    assert abs(ex.alpha_of_r(1e6) - 1 / 6) < 1e-3


@given(st.floats(min_value=-9.0, max_value=4.5))
@settings(max_examples=200, deadline=None)
def test_k_identity(logr):
    r = math.exp(logr)
    a = ex.alpha_of_r(r)
    assert abs(r ** (2 + 3 * a) * ex.k_gamma(a) - 1.0) < 1e-9


def test_beta_values():
    assert ex.beta_of_r(1.0) == pytest.approx(-2 / 3, abs=1e-12)
    assert ex.beta_of_r(ex.critical_r()) == 0.0
    assert abs(ex.beta_of_r(1e-6) - 1 / 6) < 1e-3


def test_kappa():
    assert ex.kappa_of_r(ex.critical_r()) == pytest.approx(0.0, abs=1e-14)
    assert ex.kappa_of_r(1.0) == pytest.approx(KAPPA_1, rel=1e-13)
    rs = np.linspace(1e-3, ex.critical_r() * 0.999, 50)
    assert all(ex.kappa_of_r(r) > 0 for r in rs)


def test_c_star_closed_form():
    assert ex.c_star_closed_form(0.05) == pytest.approx(CSTAR_005, rel=1e-11)
    assert ex.c_star_closed_form(0.1) == pytest.approx(CSTAR_01, rel=1e-11)
    assert abs(ex.c_star_closed_form(0.999 * ex.critical_r())) < 0.05
    with pytest.raises(ValueError):
        ex.c_star_closed_form(ex.critical_r())
    with pytest.raises(ValueError):
        ex.c_star_closed_form(0.5)


def test_c_star_negative_subcritical():
    for r in np.linspace(1e-3, ex.critical_r() * 0.9999, 40):
        assert ex.c_star_closed_form(r) < 0


def test_constants_record():
    c = ex.RestitutionConstants.from_r(0.1)
    assert c.beta == pytest.approx(-c.alpha - 2 / 3, abs=1e-15)
    assert c.k_alpha == pytest.approx(c.k_beta, rel=1e-10)
    assert c.c_star < 0 and c.kappa > 0 and c.subcritical
    sup = ex.RestitutionConstants.from_r(0.5)
    assert sup.c_star is None and not sup.subcritical
    with pytest.raises(Exception):
        c.r = 0.2  # frozen
    assert set(c.as_dict()) == {"r", "r_c", "alpha", "beta", "k_alpha", "kappa", "c_star"}
