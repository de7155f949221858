import math

import numpy as np
import pytest

from kfpwall import fluxes as fl
from kfpwall.exponents import NINE_23, RestitutionConstants, critical_r

PI_SQRT3 = math.pi / math.sqrt(3)


def target(r):
    return NINE_23 * (math.log(r) + PI_SQRT3)


def test_moment_limit():
    assert fl.zeta_lambda_moment(50.0) == pytest.approx(PI_SQRT3, abs=5e-3)


def test_moment_tail():
    d = abs(fl.zeta_lambda_moment(100.0) - fl.zeta_lambda_moment(50.0))
    # zeta Lambda ~ 1/zeta on both sides: the symmetric window cancels the
    # leading tail, so the change is far below the one-sided bound 1/M
    assert d < 1.0 / 50.0


def test_moment_integrand_zero_at_origin():
    from kfpwall.profiles import lambda_gamma
    assert 0.0 * lambda_gamma(-2 / 3, 0.0) == 0.0
    with pytest.raises(ValueError):
        fl.zeta_lambda_moment(0.0)


def test_domain():
    d = fl.ExcisionDomain(0.5, 2.0, 0.1)
    assert d.x_max == pytest.approx(0.25)
    assert d.contains(0.1, 0.04) and not d.contains(0.1, 0.06) and not d.contains(0.3, 0.0)
    with pytest.raises(ValueError):
        fl.ExcisionDomain(-1.0, 1.0, 0.1)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.9])
def test_flux_m23(r):
    q = fl.boundary_flux(-2 / 3, fl.ExcisionDomain(1.0, 1e-4, r))
    assert q == pytest.approx(target(r), rel=1e-3)


def test_flux_m23_critical():
    rc = critical_r()
    assert abs(fl.boundary_flux(-2 / 3, fl.ExcisionDomain(1.0, 1e-4, rc))) < 1e-3


def test_flux_m23_delta_invariance():
    q = [fl.boundary_flux(-2 / 3, fl.ExcisionDomain(d, 1e-2, 0.1)) for d in (0.5, 1.0, 2.0)]
    assert max(q) - min(q) < 1e-6 * abs(q[1])


def test_flux_m23_b_invariance():
    q = [fl.boundary_flux(-2 / 3, fl.ExcisionDomain(1.0, b, 0.1)) for b in (1e-2, 1e-3, 1e-4)]
    assert max(q) - min(q) < 1e-3


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_flux_alpha_vanishes(delta):
    c = RestitutionConstants.from_r(0.1)
    assert abs(fl.boundary_flux(c.alpha, fl.ExcisionDomain(delta, 1.0, 0.1), c)) < 2e-3


def test_flux_rejects_other_exponents():
    with pytest.raises(ValueError):
        fl.boundary_flux(0.0, fl.ExcisionDomain(1.0, 1.0, 0.1))


def test_delta_alpha_zero_at_origin():
    c = RestitutionConstants.from_r(0.05)
    assert fl.delta_alpha(c, 0.0) == 0.0


@pytest.mark.parametrize("r", [0.02, 0.05, 0.10, 0.15])
def test_c_star_cross_validation(r):
    c = RestitutionConstants.from_r(r)
    res = fl.c_star_quadrature(c, 50.0)
    assert res.value == pytest.approx(c.c_star, rel=1e-4)
    assert res.value < 0


def test_c_star_integrand_decay():
    c = RestitutionConstants.from_r(0.05)
    ws = np.geomspace(20, 50, 10)
    f = np.array([abs(w * fl.delta_alpha(c, w)) for w in ws])
    slope = np.polyfit(np.log(ws), np.log(f), 1)[0]
    assert slope < -1
    res = fl.c_star_quadrature(c, 50.0)
    assert res.tail_exponent > 1 and abs(res.tail) < 1e-4


def test_c_star_scope():
    with pytest.raises(ValueError):
        fl.c_star_quadrature(RestitutionConstants.from_r(0.3))
