"""Flux integrals of the self-similar profiles and the coupling constant C*."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exponents import NINE_23, RestitutionConstants
from .profiles import _lambda, dv_g_gamma, g_gamma

__all__ = [
    "ExcisionDomain",
    "zeta_lambda_moment",
    "boundary_flux",
    "boundary_flux_edges",
    "delta_alpha",
    "CStarResult",
    "c_star_quadrature",
]


@dataclass(frozen=True)
class ExcisionDomain:
    """R_{delta,b} = {0 <= x <= b delta^3, -delta <= v <= r delta}."""

    delta: float
    b: float
    r: float

    def __post_init__(self):
        if not (self.delta > 0 and self.b > 0 and self.r > 0):
            raise ValueError("delta, b and r must be positive")

    @property
    def x_max(self) -> float:
        return self.b * self.delta ** 3

    @property
    def v_lo(self) -> float:
        return -self.delta

    @property
    def v_hi(self) -> float:
        return self.r * self.delta

    def contains(self, x: float, v: float) -> bool:
        return 0.0 <= x <= self.x_max and self.v_lo <= v <= self.v_hi


def _quad(f, a, b, epsabs=1e-10, epsrel=1e-10, points=None, what="integral"):
    val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=400, points=points)
    if not math.isfinite(val) or err > max(1e3 * epsabs, 1e-6 * abs(val)):
        raise ArithmeticError(f"{what}: quadrature did not converge (value {val:.6g}, error {err:.2e})")
    return val, err


def zeta_lambda_moment(M: float) -> float:
    """int_{-M}^{M} zeta Lambda_{-2/3}(zeta) d zeta."""
    if not M > 0:
        raise ValueError("M must be positive")
    g = -2.0 / 3.0
    f = lambda z: z * _lambda(g, z)  # noqa: E731
    knots = [k for k in (-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0) if -M < k < M]
    edges = [-M] + knots + [M]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _quad(f, lo, hi, epsabs=1e-11, what="moment")[0]
    return total


def boundary_flux_edges(gamma: float, domain: ExcisionDomain, epsabs: float = 1e-8) -> tuple[float, float, float]:
    """The three edge contributions (top, bottom, right) to the inward flux."""
    X = domain.x_max
    v_hi, v_lo = domain.v_hi, domain.v_lo
    # horizontal edges: integrate in s with x = X s^3 to smooth the x -> 0 end
    def top(s):
        x = X * s ** 3
        return -dv_g_gamma(gamma, x, v_hi) * 3.0 * X * s * s

    def bot(s):
        x = X * s ** 3
        return dv_g_gamma(gamma, x, v_lo) * 3.0 * X * s * s

    def right(v):
        return v * g_gamma(gamma, X, v)

    q_top = _quad(top, 0.0, 1.0, epsabs=epsabs, epsrel=1e-10, what="top edge")[0]
    q_bot = _quad(bot, 0.0, 1.0, epsabs=epsabs, epsrel=1e-10, what="bottom edge")[0]
    pts = [0.0] if v_lo < 0.0 < v_hi else None
    q_right = _quad(right, v_lo, v_hi, epsabs=epsabs, epsrel=1e-10, points=pts, what="right edge")[0]
    return q_top, q_bot, q_right


def boundary_flux(gamma: float, domain: ExcisionDomain, constants: RestitutionConstants | None = None) -> float:
    """Flux of (-v G, dG/dv) through the part of dR_{delta,b} with x > 0.

    The normal points into R_{delta,b}.  ``gamma`` must be -2/3 or alpha(r).
    """
    if constants is None:
        constants = RestitutionConstants.from_r(domain.r)
    if abs(constants.r - domain.r) > 1e-15:
        raise ValueError("constants and domain disagree on r")
    if not (abs(gamma + 2.0 / 3.0) < 1e-12 or abs(gamma - constants.alpha) < 1e-12):
        raise ValueError(f"boundary_flux supports gamma in {{-2/3, alpha(r)}}, got {gamma!r}")
    return math.fsum(boundary_flux_edges(gamma, domain))


def delta_alpha(constants: RestitutionConstants, w: float) -> float:
    """Delta(w) = U(-a,2/3;-w^3)U(-b,2/3;w^3) - U(-a,2/3;w^3)U(-b,2/3;-w^3)."""
    a, b = constants.alpha, constants.beta
    return _lambda(a, w) * _lambda(b, -w) - _lambda(a, -w) * _lambda(b, w)


@dataclass(frozen=True)
class CStarResult:
    value: float
    integral: float
    tail: float
    tail_exponent: float
    quad_error: float


def c_star_quadrature(constants: RestitutionConstants, R: float = 50.0) -> CStarResult:
    """C* from -int_0^inf w Delta(w) dw - 2 cos(pi (beta + 1/3)) log r, times 9^{2/3}.

    The integral is split at w = 1 and w = R; the contribution beyond R is
    extrapolated from a power-law fit c w^{-p} of the integrand on [R/2, R].
    """
    if not constants.r < constants.r_c:
        raise ValueError("c_star_quadrature needs 0 < r < r_c")
    if not R > 1:
        raise ValueError("R must exceed 1")
    f = lambda w: w * delta_alpha(constants, w)  # noqa: E731
    edges = [0.0, 1.0] + [e for e in (3.0, 10.0) if e < R] + [R]
    total = 0.0
    qerr = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(f, lo, hi, epsabs=1e-12, epsrel=1e-11, what="C* integral")
        total += v
        qerr += e
    ws = np.geomspace(0.5 * R, R, 8)
    fs = np.array([f(w) for w in ws])
    tail = 0.0
    p = math.nan
    if np.all(fs != 0) and np.all(np.sign(fs) == np.sign(fs[0])):
        slope, icpt = np.polyfit(np.log(ws), np.log(np.abs(fs)), 1)
        p = -slope
        if p > 1.0:
            c = np.sign(fs[0]) * math.exp(icpt)
            tail = c * R ** (1.0 - p) / (p - 1.0)
    integral = total + tail
    value = NINE_23 * (
        -integral - 2.0 * math.cos(math.pi * (constants.beta + 1.0 / 3.0)) * math.log(constants.r)
    )
    return CStarResult(value=float(value), integral=float(integral), tail=float(tail), tail_exponent=float(p), quad_error=float(qerr))
