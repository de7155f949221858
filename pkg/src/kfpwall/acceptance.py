"""Acceptance experiments 1-12, shared by ``kfpwall reproduce all`` and the test suite.

Every criterion returns a CriterionResult with the measured quantities in
``detail``; ``passed`` applies the stated tolerance and nothing else.
Runtimes are recorded next to their budgets but are not part of the verdict.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import fluxes as fl
from . import lattice as lt
from . import profiles as pf
from . import sde
from . import specfun as sf
from .exponents import (
    RestitutionConstants, alpha_of_r, beta_of_r, beta_residual, c_star_closed_form, critical_r,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_table"]

PI_SQRT3 = math.pi / math.sqrt(3.0)
NINE_23 = 9.0 ** (2.0 / 3.0)

# criterion 6 sweep: long horizon so the heavy-tailed collapse times have resolved
SWEEP_RS = (0.05, 0.10, 0.12, 0.14, 0.18, 0.20, 0.25)
SWEEP_T_MAX = 1e8
SWEEP_H_MAX = 1e12

# U(a, 2/3, z) frozen from 40-digit mpmath
U23_SPOT = [
    (2 / 3, -12.0, 0.20339461206771509),
    (2 / 3, 10.0, 0.20299885727140562),
    (0.9, -40.0, -0.015474557302558895),
    (-0.15666666666666665, -3.0, 0.07644094133296984),
    (0.3, 200.0, 0.2038357688539514),
    (0.72443621491816, 0.5, 0.8934533990160213),
]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:>2} {self.name} ({self.runtime:.1f} s, budget {self.budget:g} s)"

    def as_dict(self) -> dict:
        return {
            "number": self.number, "name": self.name, "passed": bool(self.passed),
            "runtime": self.runtime, "budget": self.budget, "detail": _jsonable(self.detail),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


# ------------------------------------------------------------ criteria ---

def c1_exponents(fast: bool = False) -> tuple[bool, dict]:
    rc = critical_r()
    a1 = alpha_of_r(1.0)
    arc = alpha_of_r(rc)
    rs = np.geomspace(1e-4, 1e2, 50)  # the documented exponent grid range
    kr, br = [], []
    for r in rs:
        a = alpha_of_r(float(r))
        kr.append(abs(r ** (2 + 3 * a) * 2 * math.cos(math.pi * (a + 1 / 3)) - 1))
        br.append(abs(beta_residual(float(r), beta_of_r(float(r)))))
    d = {"alpha_1": a1, "alpha_rc_plus_23": arc + 2 / 3, "max_kr_residual": max(kr),
         "max_beta_residual": max(br)}
    ok = abs(a1) < 1e-10 and abs(arc + 2 / 3) < 1e-10 and max(kr) < 1e-9 and max(br) < 1e-9
    return ok, d


def c2_moment(fast: bool = False) -> tuple[bool, dict]:
    val = fl.zeta_lambda_moment(50.0)
    return abs(val - PI_SQRT3) < 5e-3, {"value": val, "target": PI_SQRT3, "error": val - PI_SQRT3}


def c3_flux_m23(fast: bool = False) -> tuple[bool, dict]:
    rc = critical_r()
    ok = True
    rows = []
    for r in (0.1, 0.3, rc, 0.9):
        q = fl.boundary_flux(-2 / 3, fl.ExcisionDomain(1.0, 1e-4, r))
        target = NINE_23 * (math.log(r) + PI_SQRT3)
        if r == rc:
            err = abs(q - target)
            good = err < 1e-3
        else:
            err = abs(q - target) / abs(target)
            good = err < 1e-3
        ok &= good
        rows.append({"r": r, "flux": q, "target": target, "error": err, "ok": good})
    return ok, {"rows": rows}


def c4_flux_alpha(fast: bool = False) -> tuple[bool, dict]:
    c = RestitutionConstants.from_r(0.1)
    rows = []
    for delta in (0.5, 1.0, 2.0):
        q = fl.boundary_flux(c.alpha, fl.ExcisionDomain(delta, 1.0, 0.1), c)
        rows.append({"delta": delta, "flux": q})
    return all(abs(x["flux"]) < 2e-3 for x in rows), {"rows": rows}


def c5_cstar(fast: bool = False) -> tuple[bool, dict]:
    rows = []
    ok = True
    for r in (0.02, 0.05, 0.10, 0.15):
        c = RestitutionConstants.from_r(r)
        q = fl.c_star_quadrature(c, 50.0).value
        dev = abs(q - c.c_star) / abs(c.c_star)
        good = dev < 1e-4 and c.c_star < 0 and q < 0
        ok &= good
        rows.append({"r": r, "closed_form": c.c_star, "quadrature": q, "rel_dev": dev, "ok": good})
    near = c_star_closed_form(0.999 * critical_r())
    ok &= abs(near) < 0.05
    return ok, {"rows": rows, "near_critical": near}


def _sweep_crossing(rs, fr) -> float:
    for i in range(len(rs) - 1):
        if fr[i] >= 0.5 > fr[i + 1]:
            return rs[i] + (fr[i] - 0.5) * (rs[i + 1] - rs[i]) / (fr[i] - fr[i + 1])
    return math.nan


def c6_collapse(fast: bool = False) -> tuple[bool, dict]:
    n = 1000 if fast else 10_000
    low = sde.collapse_experiment(sde.SimConfig(r=0.05, T_max=50.0, n_paths=n, seed=6))
    high = sde.collapse_experiment(sde.SimConfig(r=0.5, T_max=10.0, n_paths=n, seed=6))
    fr = []
    for r in SWEEP_RS:
        s = sde.collapse_experiment(sde.SimConfig(r=r, T_max=SWEEP_T_MAX, h_max=SWEEP_H_MAX,
                                                  n_paths=n, seed=7))
        fr.append(s.fraction)
    cross = _sweep_crossing(SWEEP_RS, fr)
    d = {
        "n_paths": n,
        "fraction_r005_T50": low.fraction, "ci_r005": [low.ci_low, low.ci_high],
        "fraction_r05_T10": high.fraction, "ci_r05": [high.ci_low, high.ci_high],
        "sweep_T_max": SWEEP_T_MAX, "sweep_rs": list(SWEEP_RS), "sweep_fractions": fr,
        "crossing": cross,
    }
    ok = low.fraction > 0.95 and high.fraction < 0.01 and 0.12 <= cross <= 0.20
    return ok, d


def c7_hitting(fast: bool = False) -> tuple[bool, dict]:
    n = 1000 if fast else 10_000
    a = sde.hitting_statistics(1.0, n, rng=1)
    b = sde.hitting_statistics(2.0, n, rng=2)
    pt = stats.ks_2samp(a.t1, b.t1 / 4.0).pvalue
    ph = stats.ks_2samp(a.h1, b.h1 / 2.0).pvalue
    d = {"n": n, "p_t1": pt, "p_h1": ph, "unreturned": [a.n_unreturned, b.n_unreturned]}
    return pt > 0.01 and ph > 0.01, d


def _lattice_err(h, bc, lam, t):
    d = lt.evolve(lt.LatticeDist.gaussian(h, lam), round(t / h ** 2))
    return lt.continuum_compare(d, bc)


def c8_lattice(fast: bool = False) -> tuple[bool, dict]:
    d = {}
    ok = True
    for name, lam in (("neumann", 1.0), ("dirichlet", 0.0)):
        bc = lt.BoundaryCondition(name)
        e1 = _lattice_err(1 / 128, bc, lam, 0.25).max_error
        e2 = _lattice_err(1 / 256, bc, lam, 0.25).max_error
        good = e1 < 5 / 128 and e1 / e2 >= 2 / 1.5
        ok &= good
        d[name] = {"err_h128": e1, "err_h256": e2, "ratio": e1 / e2, "ok": good}
    mu, h = 1.0, 1 / 128
    c = _lattice_err(h, lt.BoundaryCondition("dynamic", mu), mu * h, 1.0)
    gap = abs(c.m_lattice - c.u0_reference / (2 * mu))
    ok &= gap < 10 * h
    d["dynamic"] = {"P0": c.m_lattice, "U0_over_2mu": c.u0_reference / (2 * mu), "gap": gap}
    return ok, d


def _pde_cfg(fast: bool, **kw):
    from .pde import PDEConfig
    if fast:
        kw.setdefault("nx", 50)
        kw.setdefault("nv", 160)
    return PDEConfig(**kw)


def c9_nonuniqueness(fast: bool = False) -> tuple[bool, dict]:
    from .pde import run
    tr = run(_pde_cfg(fast, r=0.1, bc="trap", t_end=0.5))
    nt = run(_pde_cfg(fast, r=0.1, bc="nontrap", t_end=0.5))
    d = {"m_trap": tr.m, "m_nontrap": nt.m,
         "mass_error_trap": tr.total_mass() - 1, "mass_error_nontrap": nt.total_mass() - 1,
         "delta": tr.config.delta}
    ok = (tr.m > 0.05 and nt.m < 1e-3 and abs(tr.total_mass() - 1) < 2e-3
          and abs(nt.total_mass() - 1) < 2e-3)
    return ok, d


def c10_partial(fast: bool = False) -> tuple[bool, dict]:
    """The imposed coefficient satisfies the relation by construction, so the
    verdict uses the a_alpha recovered from the computed density (ring fit)."""
    from .pde import run
    mu = 5.0
    res = run(_pde_cfg(fast, r=0.1, bc=f"partial:{mu:g}", t_end=0.5))
    s = res.series
    w = (s["t"] >= 0.3) & (s["t"] <= 0.5)

    def rel(a):
        target = mu * s["m"][w]
        den = np.maximum(np.maximum(a[w], target), 1e-300)
        return float(np.mean(np.abs(a[w] - target) / den))

    d = {"mu_star": mu, "rel_dev_fitted": rel(s["fit_alpha"]), "rel_dev_imposed": rel(s["a_alpha"]),
         "mean_fit_alpha": float(np.mean(s["fit_alpha"][w])),
         "mean_mu_m": float(np.mean(mu * s["m"][w]))}
    return d["rel_dev_fitted"] < 0.05, d


def c11_whole_line(fast: bool = False) -> tuple[bool, dict]:
    from .pde import run
    from .pde.freespace import l1_deviation, symmetric_reference
    cfg = _pde_cfg(fast, r=1.0, bc="super", t_end=0.25, x0=0.3, v0=-0.5, symmetric=True)
    res = run(cfg)
    dev = l1_deviation(res.field.values, symmetric_reference(cfg, res.field.grid, 0.25), res.field.grid)
    return dev < 0.05, {"l1_deviation": dev}


def _d1(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _d2(f, x, h):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


def c12_specfun(fast: bool = False) -> tuple[bool, dict]:
    checks: dict[str, bool] = {}
    checks["gamma_half"] = abs(sf.gamma(0.5) - math.sqrt(math.pi)) < 1e-12
    checks["gamma_third"] = abs(sf.gamma(1 / 3) - 2.6789385347077476) < 1e-9
    checks["gamma_minus_third"] = abs(sf.gamma(-1 / 3) + 4.062353818279201) < 1e-9
    for a, b in ((2 / 3, 4 / 3), (1.0, 4 / 3), (0.5, 2 / 3)):
        rho = 1e4
        ratio = sf.kummer_m(a, b, -rho) / (sf.gamma(b) / sf.gamma(b - a) * rho ** (-a))
        checks[f"kummer_tail_{a:.3g}_{b:.3g}"] = abs(ratio - 1) < 1e-3
    checks["kummer_a_eq_b"] = abs(sf.kummer_m(2 / 3, 2 / 3, -30.0) / math.exp(-30.0) - 1) < 1e-12
    checks["tricomi_large_y"] = abs(sf.tricomi_u(2 / 3, 2 / 3, 1e6) * 1e6 ** (2 / 3) - 1) < 1e-3
    for a, z, ref in U23_SPOT:
        checks[f"tricomi_{a:.3g}_{z:g}"] = abs(sf.tricomi_u(a, 2 / 3, z) - ref) <= 1e-10 * abs(ref) + 1e-15
    for gam in (-2 / 3, -0.7244362149181633, 0.1):
        f = lambda s, g=gam: sf.tricomi_u(-g, 2 / 3, s)  # noqa: E731
        worst = 0.0
        for y in (-5.0, -1.0, 0.3, 1.0, 5.0):
            worst = max(worst, abs(y * _d2(f, y, 1e-3) + (2 / 3 - y) * _d1(f, y, 1e-3) + gam * f(y)))
        checks[f"kummer_ode_{gam:.3g}"] = worst < 1e-6
    # profiles
    lam = lambda z: pf.lambda_gamma(-2 / 3, z)  # noqa: E731
    checks["lambda_zero_exponent"] = all(abs(pf.lambda_gamma(0.0, z) - 1) < 1e-14 for z in (-30.0, 0.0, 40.0))
    checks["lambda_slope_at_zero"] = abs(_d1(lam, 0.0, 1e-3) - 3) < 1e-6
    checks["lambda_left_tail"] = abs(lam(-20.0) * 400 - 1) < 1e-2
    checks["lambda_two_representations"] = all(
        abs(lam(z) - pf.lambda_m23_oracle(z)) < 1e-8 for z in (-3.0, 0.0, 1.0, 3.0))
    checks["lambda_ode"] = all(
        abs(_d1(lam, z, 1e-3) + 3 * z * z * lam(z) - 3) < 1e-6 for z in (-4.0, -0.7, 0.0, 0.5, 2.0, 6.0))
    c = RestitutionConstants.from_r(0.1)
    eps = 1e-9
    for name, gam in (("m23", -2 / 3), ("alpha", c.alpha)):
        checks[f"wall_limit_{name}"] = abs(pf.g_gamma(gam, eps, -1.0) / pf.boundary_value_g(gam, -1.0) - 1) < 1e-3
        lhs = pf.g_gamma(gam, eps, -1.0)
        checks[f"wall_condition_{name}"] = abs(lhs - 0.01 * pf.g_gamma(gam, eps, 0.1)) / lhs < 1e-3
        checks[f"homogeneity_{name}"] = all(
            abs(pf.g_gamma(gam, lm ** 3 * 0.3, lm * -0.4) / (lm ** (3 * gam) * pf.g_gamma(gam, 0.3, -0.4)) - 1) < 1e-10
            for lm in (0.5, 2.0))
    fm = pf.f_beta(c, eps, -1.0)
    checks["adjoint_wall_condition"] = abs(pf.f_beta(c, eps, 0.1) - fm) / fm < 1e-3
    checks["adjoint_large_y"] = abs(pf.phi_beta(c.beta, 1e6) / 1e6 ** c.beta - 1) < 1e-3
    worst = 0.0
    for r in (0.1, 0.5):
        cr = RestitutionConstants.from_r(r)
        for x, v in ((0.5, 0.3), (0.2, -0.4), (1.0, 1.0), (0.3, 0.0)):
            a1, a2 = _d2(lambda s: pf.supersolution_s(cr, x, s), v, 1e-3), _d2(lambda s: pf.supersolution_s(cr, x, s), v, 5e-4)
            b1, b2 = _d1(lambda s: pf.supersolution_s(cr, s, v), x, 1e-3 * x), _d1(lambda s: pf.supersolution_s(cr, s, v), x, 5e-4 * x)
            svv, sx = a2 + (a2 - a1) / 15, b2 + (b2 - b1) / 15
            worst = max(worst, abs(svv + v * sx - 1))
    checks["supersolution_equation"] = worst < 1e-5
    failed = [k for k, v in checks.items() if not v]
    return not failed, {"n_checks": len(checks), "failed": failed}


CRITERIA: dict[int, tuple[str, Callable[[bool], tuple[bool, dict]], float]] = {
    1: ("exponent identities", c1_exponents, 1),
    2: ("moment integral", c2_moment, 5),
    3: ("flux constant of G_-2/3", c3_flux_m23, 30),
    4: ("vanishing G_alpha flux", c4_flux_alpha, 30),
    5: ("C* cross-validation", c5_cstar, 120),
    6: ("collapse dichotomy", c6_collapse, 600),
    7: ("hitting-law scale invariance", c7_hitting, 300),
    8: ("lattice continuum limits", c8_lattice, 120),
    9: ("PDE nonuniqueness", c9_nonuniqueness, 600),
    10: ("partial-trapping relation", c10_partial, 600),
    11: ("r = 1 whole-line consistency", c11_whole_line, 300),
    12: ("special-function battery", c12_specfun, 60),
}


def run_criterion(number: int, fast: bool = False) -> CriterionResult:
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn(fast)
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0, budget)


def run_all(fast: bool = False, only=None, on_result=None) -> list[CriterionResult]:
    out = []
    for k in sorted(CRITERIA if only is None else only):
        res = run_criterion(k, fast)
        out.append(res)
        if on_result is not None:
            on_result(res)
    return out


def format_table(results) -> str:
    lines = [r.line() for r in results]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} criteria passed")
    return "\n".join(lines)
