"""Self-similar profiles near the singular point (x, v) = (0, 0).

Conventions: for the forward profiles ``G_gamma = x^gamma Lambda_gamma(zeta)``
with ``zeta = v / (9x)^{1/3}`` and ``Lambda_gamma(zeta) = U(-gamma, 2/3, -zeta^3)``.
For the adjoint profiles ``F_beta = x^beta Phi_beta(y)`` with ``y = v^3/(9x)``
and ``Phi_beta(y) = U(-beta, 2/3, y)``, i.e. ``Phi_beta(y) = Lambda_beta(-cbrt(y))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .exponents import RestitutionConstants, k_gamma, supersolution_c2
from .specfun import gamma as gamma_fn, tricomi_u

__all__ = [
    "SimilarityPoint",
    "SelfSimilarProfile",
    "lambda_gamma",
    "lambda_gamma_prime",
    "phi_beta",
    "g_gamma",
    "dv_g_gamma",
    "boundary_value_g",
    "lambda_m23_oracle",
    "f_beta",
    "supersolution_q",
    "supersolution_s",
    "supersolution_q0",
]

_CBRT9 = 9.0 ** (1.0 / 3.0)
_GAMMA_LO = -5.0 / 6.0
_GAMMA_HI = 1.0 / 6.0


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


@dataclass(frozen=True)
class SimilarityPoint:
    """A phase-space point with both similarity variables attached."""

    x: float
    v: float
    zeta: float = field(init=False)
    z: float = field(init=False)  # argument of U for G: -zeta^3 = -v^3/(9x)
    y: float = field(init=False)  # argument of U for F: +v^3/(9x)

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError("similarity variables need x > 0")
        object.__setattr__(self, "zeta", self.v / (9.0 * self.x) ** (1.0 / 3.0))
        y = self.v ** 3 / (9.0 * self.x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", -y)


def _lambda(gamma: float, zeta: float) -> float:
    return tricomi_u(-gamma, 2.0 / 3.0, -zeta * zeta * zeta)


def lambda_gamma(gamma: float, zeta: float) -> float:
    """Lambda_gamma(zeta) = U(-gamma, 2/3; -zeta^3)."""
    if not (_GAMMA_LO < gamma <= _GAMMA_HI):
        raise ValueError(f"gamma must lie in (-5/6, 1/6], got {gamma!r}")
    return _lambda(gamma, zeta)


def _stencil(f, x0: float, h: float) -> float:
    # 5-point first derivative
    return (f(x0 - 2 * h) - 8 * f(x0 - h) + 8 * f(x0 + h) - f(x0 + 2 * h)) / (12 * h)


def lambda_gamma_prime(gamma: float, zeta: float) -> float:
    """d Lambda_gamma / d zeta by a Richardson-extrapolated 5-point stencil."""
    f = lambda s: _lambda(gamma, s)  # noqa: E731
    h = 2e-3 * max(1.0, abs(zeta))
    d1 = _stencil(f, zeta, h)
    d2 = _stencil(f, zeta, 0.5 * h)
    return d2 + (d2 - d1) / 15.0


def phi_beta(beta: float, y: float) -> float:
    """Phi_beta(y) = U(-beta, 2/3; y)."""
    return tricomi_u(-beta, 2.0 / 3.0, y)


def g_gamma(gamma: float, x: float, v: float) -> float:
    if not x > 0:
        raise ValueError("g_gamma needs x > 0; use boundary_value_g at the wall")
    return x ** gamma * _lambda(gamma, v / (_CBRT9 * _cbrt(x)))


def dv_g_gamma(gamma: float, x: float, v: float) -> float:
    """dG/dv = x^{gamma - 1/3} 9^{-1/3} Lambda'_gamma(zeta)."""
    c = _cbrt(x)
    return x ** gamma / (c * _CBRT9) * lambda_gamma_prime(gamma, v / (_CBRT9 * c))


def boundary_value_g(gamma: float, v: float) -> float:
    """Limit of G_gamma(x, v) as x -> 0+ for v != 0."""
    if v == 0.0:
        raise ValueError("G_gamma is singular at the origin")
    base = abs(v) ** (3.0 * gamma) / 9.0 ** gamma
    return base if v < 0 else k_gamma(gamma) * base


def lambda_m23_oracle(zeta: float, tol: float = 1e-12) -> float:
    """Integral form 3 int_{-inf}^{zeta} exp(s^3 - zeta^3) ds of Lambda_{-2/3}.

    With u = zeta - s the exponent (zeta - u)^3 - zeta^3 is monotone in u.
    """
    z = float(zeta)

    def integrand(u):
        return math.exp((z - u) ** 3 - z ** 3)

    # characteristic decay scale of the integrand
    scale = min(1.0, 1.0 / max(3.0 * z * z, 1e-12)) if z < 0 else 1.0
    pts = [0.0, scale, 4 * scale, 20 * scale]
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=0, epsrel=tol, limit=200)
        total += val
        err += e
    val, e = integrate.quad(integrand, pts[-1], np.inf, epsabs=0, epsrel=tol, limit=200)
    total += val
    err += e
    if err > 1e-8 * abs(total):
        raise ArithmeticError(f"Lambda oracle quadrature did not converge (est. error {err:.2e})")
    return 3.0 * total


def f_beta(constants: RestitutionConstants, x: float, v: float) -> float:
    """Adjoint profile F_beta = x^beta U(-beta, 2/3; v^3/(9x))."""
    if not x > 0:
        raise ValueError("f_beta needs x > 0")
    b = constants.beta
    return x ** b * phi_beta(b, v ** 3 / (9.0 * x))


def supersolution_q(constants: RestitutionConstants, z: float) -> float:
    c2 = supersolution_c2(constants.r)
    return 0.5 * z * z + c2 * tricomi_u(-2.0 / 3.0, 2.0 / 3.0, z ** 3 / 9.0)


def supersolution_s(constants: RestitutionConstants, x: float, v: float) -> float:
    """S = x^{2/3} Q(v / x^{1/3}), a solution of S_vv + v S_x = 1 with S(0,-v) = S(0,rv)."""
    if constants.r > 1.0:
        raise ValueError("supersolution defined only for 0 < r <= 1")
    if not x > 0:
        raise ValueError("supersolution_s needs x > 0")
    c = _cbrt(x)
    return c * c * supersolution_q(constants, v / c)


def supersolution_q0(constants: RestitutionConstants) -> float:
    """Q(0) = c2 Gamma(1/3)/Gamma(-1/3)."""
    return supersolution_c2(constants.r) * gamma_fn(1.0 / 3.0) / gamma_fn(-1.0 / 3.0)


@dataclass(frozen=True)
class SelfSimilarProfile:
    """Evaluator for one profile family at fixed exponent.

    ``kind`` is ``"G"`` (forward, exponent ``gamma``), ``"F"`` (adjoint with
    exponent ``constants.beta``) or ``"S"`` (supersolution).
    """

    gamma: float
    constants: RestitutionConstants
    kind: str = "G"
    c2: float = field(init=False)

    def __post_init__(self):
        if self.kind not in ("G", "F", "S"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "G" and not (_GAMMA_LO < self.gamma <= _GAMMA_HI):
            raise ValueError("G profiles need gamma in (-5/6, 1/6]")
        object.__setattr__(self, "c2", supersolution_c2(self.constants.r))

    @classmethod
    def g(cls, constants: RestitutionConstants, which: str = "alpha") -> "SelfSimilarProfile":
        gam = constants.alpha if which == "alpha" else -2.0 / 3.0
        return cls(gam, constants, "G")

    @classmethod
    def f(cls, constants: RestitutionConstants) -> "SelfSimilarProfile":
        return cls(constants.beta, constants, "F")

    def __call__(self, x: float, v: float) -> float:
        if self.kind == "G":
            return g_gamma(self.gamma, x, v)
        if self.kind == "F":
            return f_beta(self.constants, x, v)
        return supersolution_s(self.constants, x, v)

    def grid(self, xs, vs) -> np.ndarray:
        """Values on the tensor grid ``xs x vs`` (shape ``(len(xs), len(vs))``)."""
        out = np.empty((len(xs), len(vs)))
        for i, x in enumerate(xs):
            for j, v in enumerate(vs):
                out[i, j] = self(float(x), float(v))
        return out
