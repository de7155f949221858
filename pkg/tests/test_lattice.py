import math

import numpy as np
import pytest

from kfpwall import lattice as lt


def test_step_rules_by_hand():
    d = lt.LatticeDist(h=0.5, lam=0.3, p=np.array([0.2, 0.1, 0.3, 0.15, 0.25]))
    n = lt.step_master(d).p
    assert n[0] == pytest.approx(0.5 * 0.1 + 0.7 * 0.2)
    assert n[1] == pytest.approx(0.5 * 0.3 + 0.3 * 0.2)
    assert n[2] == pytest.approx(0.5 * (0.1 + 0.15))
    assert n[3] == pytest.approx(0.5 * (0.3 + 0.25))
    assert n[4] == pytest.approx(0.5 * (0.15 + 0.25))
    assert n.sum() == pytest.approx(1.0, abs=1e-15)


def test_uniform_interior_stationary():
    p = np.full(50, 1.0 / 50)
    d = lt.step_master(lt.LatticeDist(h=0.1, lam=1.0, p=p))
    assert np.allclose(d.p[2:-1], 1.0 / 50, atol=1e-16)


def test_trapping_origin_nondecreasing():
    d = lt.LatticeDist.gaussian(1 / 64, 0.0)
    last = d.p[0]
    for _ in range(2000):
        d = lt.step_master(d)
        assert d.p[0] >= last
        last = d.p[0]


@pytest.mark.parametrize("lam", [0.0, 0.37, 1.0])
def test_mass_conservation_and_positivity(lam):
    d = lt.evolve(lt.LatticeDist.gaussian(1 / 64, lam), 10_000)
    assert abs(d.mass() - 1.0) < 1e-12
    assert np.all(d.p >= 0)


def test_random_initial_data_mass():
    rng = np.random.default_rng(3)
    p = rng.random(200)
    p /= p.sum()
    d = lt.evolve(lt.LatticeDist(h=0.02, lam=0.6, p=p), 10_000)
    assert abs(d.mass() - 1.0) < 1e-12


def test_validation():
    with pytest.raises(ValueError):
        lt.LatticeDist(h=0.0, lam=0.5, p=np.ones(3))
    with pytest.raises(ValueError):
        lt.LatticeDist(h=0.1, lam=1.5, p=np.ones(3))
    with pytest.raises(ValueError):
        lt.BoundaryCondition("robin")
    assert lt.BoundaryCondition.parse("dynamic:2.5").mu == 2.5


def test_gaussian_setup():
    d = lt.LatticeDist.gaussian(1 / 128, 1.0)
    assert d.p.size == math.ceil(4 * 128) + 1
    assert d.p[0] == 0 and abs(d.mass() - 1) < 1e-14


def _run(h, bc, lam, t):
    d = lt.evolve(lt.LatticeDist.gaussian(h, lam), round(t / h ** 2))
    return d, lt.continuum_compare(d, bc)


def test_neumann_limit():
    bc = lt.BoundaryCondition("neumann")
    _, c1 = _run(1 / 128, bc, 1.0, 0.25)
    _, c2 = _run(1 / 256, bc, 1.0, 0.25)
    assert c1.max_error < 5 / 128
    assert c1.max_error / c2.max_error >= 2 / 1.5
    assert c1.m_reference == 0.0


def test_dirichlet_limit():
    bc = lt.BoundaryCondition("dirichlet")
    d, c1 = _run(1 / 128, bc, 0.0, 0.25)
    _, c2 = _run(1 / 256, bc, 0.0, 0.25)
    assert c1.max_error < 5 / 128
    assert abs(c1.m_lattice - c1.m_reference) < 5 / 128
    assert c1.max_error / c2.max_error >= 2 / 1.5


def test_dirichlet_reference_mass_matches_flux():
    # m(t) = 1 - int U agrees with erfc-type closed form obtained from the
    # image solution's boundary flux integrated in time
    bc = lt.BoundaryCondition("dirichlet")
    ts = np.linspace(1e-4, 0.25, 2001)
    flux = []
    for t in ts:
        x = np.array([0.0, 1e-5])
        u, _, _ = lt.reference_profile(bc, x, t)
        flux.append(0.5 * (u[1] - u[0]) / 1e-5)
    m_flux = np.trapezoid(flux, ts)
    _, m_ref, _ = lt.reference_profile(bc, np.array([0.5]), 0.25)
    assert m_flux == pytest.approx(m_ref, rel=1e-3)


def test_dynamic_limit():
    mu = 1.0
    bc = lt.BoundaryCondition("dynamic", mu)
    for h in (1 / 128,):
        d, c = _run(h, bc, mu * h, 1.0)
        assert abs(c.m_lattice - c.u0_reference / (2 * mu)) < 10 * h
    _, c1 = _run(1 / 64, bc, mu / 64, 0.25)
    _, c2 = _run(1 / 128, bc, mu / 128, 0.25)
    assert c1.max_error / c2.max_error >= 2 / 1.5


def test_dynamic_flux_balance():
    # dm/dt against the boundary flux U_x(0)/2 read off the lattice profile
    mu, h = 1.0, 1 / 128
    d0 = lt.evolve(lt.LatticeDist.gaussian(h, mu * h), round(0.5 / h ** 2))
    k = round(0.02 / h ** 2)
    d1 = lt.evolve(d0, k)
    dm_dt = (d1.p[0] - d0.p[0]) / (k * h * h)
    dmid = lt.evolve(d0, k // 2)
    u = dmid.p[1:6] / h
    x = dmid.x[1:6]
    slope = np.polyfit(x, u, 2)[1]
    assert abs(dm_dt - 0.5 * slope) < 10 * h * max(1.0, abs(dm_dt))


def test_trapping_interior_mass_nonincreasing():
    d = lt.LatticeDist.gaussian(1 / 64, 0.0)
    last = d.interior_mass()
    for _ in range(20):
        d = lt.evolve(d, 200)
        assert d.interior_mass() <= last + 1e-15
        last = d.interior_mass()


def test_short_run_warning():
    d = lt.evolve(lt.LatticeDist.gaussian(1 / 32, 1.0), 10)
    c = lt.continuum_compare(d, lt.BoundaryCondition("neumann"))
    assert c.warning is not None
