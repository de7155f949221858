"""Critical exponents and r-derived constants of the inelastic wall problem."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

SQRT3 = math.sqrt(3.0)
NINE_23 = 9.0 ** (2.0 / 3.0)
R_C = math.exp(-math.pi / SQRT3)

__all__ = [
    "RestitutionConstants",
    "critical_r",
    "exponent_residual",
    "exponent_residual_deriv",
    "beta_residual",
    "k_gamma",
    "alpha_of_r",
    "beta_of_r",
    "kappa_of_r",
    "c_star_closed_form",
    "supersolution_c2",
]


def critical_r() -> float:
    """exp(-pi/sqrt(3)): bounces accumulate below this restitution value."""
    return R_C


def exponent_residual(r: float, x: float) -> float:
    """y_r(x) = (2 + 3x) log r + log(2 cos(pi (x + 1/3)))."""
    c = 2.0 * math.cos(math.pi * (x + 1.0 / 3.0))
    if c <= 0.0:
        return -math.inf
    return (2.0 + 3.0 * x) * math.log(r) + math.log(c)


def exponent_residual_deriv(r: float, x: float) -> float:
    return 3.0 * math.log(r) - math.pi * math.tan(math.pi * (x + 1.0 / 3.0))


def beta_residual(r: float, beta: float) -> float:
    """-3 beta log r + log(2 sin(pi (1/6 - beta)))."""
    return -3.0 * beta * math.log(r) + math.log(2.0 * math.sin(math.pi * (1.0 / 6.0 - beta)))


def k_gamma(gamma: float) -> float:
    """Ratio of the two algebraic tails of Lambda_gamma."""
    return 2.0 * math.cos(math.pi * (gamma + 1.0 / 3.0))


def _check_r(r: float) -> float:
    r = float(r)
    if not (r > 0.0) or not math.isfinite(r):
        raise ValueError(f"restitution coefficient must be positive and finite, got {r!r}")
    return r


def alpha_of_r(r: float, tol: float = 1e-12) -> float:
    """Nontrivial root of y_r in (-5/6, 1/6); exact at r = r_c (-2/3) and r = 1 (0)."""
    r = _check_r(r)
    if r == R_C:
        return -2.0 / 3.0
    if r == 1.0:
        return 0.0
    lr = math.log(r)
    x_rc = math.atan(3.0 * lr / math.pi) / math.pi - 1.0 / 3.0
    if r < R_C:
        lo, hi = -5.0 / 6.0, x_rc
        f_lo = -1.0  # y_r -> -inf at -5/6
    else:
        lo, hi = x_rc, 1.0 / 6.0
        f_lo = exponent_residual(r, lo)
    # y_r is positive at x_rc, negative at the far end of the bracket
    if f_lo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = exponent_residual(r, mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    a, b = min(lo, hi) - tol, max(lo, hi) + tol
    for _ in range(2):
        d = exponent_residual_deriv(r, x)
        if d == 0.0 or not math.isfinite(d):
            break
        xn = x - exponent_residual(r, x) / d
        if not (a <= xn <= b):
            break
        x = xn
    return x


def beta_of_r(r: float) -> float:
    return -alpha_of_r(r) - 2.0 / 3.0


def kappa_of_r(r: float) -> float:
    """Rate constant turning a_{-2/3} into mass transfer to the origin."""
    r = _check_r(r)
    return -NINE_23 * (math.log(r) + math.pi / SQRT3)


def c_star_closed_form(r: float) -> float:
    r = _check_r(r)
    if r >= R_C:
        raise ValueError(f"C* is only defined for 0 < r < r_c = {R_C:.10f}, got r = {r!r}")
    al = alpha_of_r(r)
    be = -al - 2.0 / 3.0
    pa = math.pi * al
    return NINE_23 * (
        (math.pi / 3.0) * (math.sin(pa) + SQRT3 * math.cos(pa))
        - 2.0 * math.cos(math.pi * (be + 1.0 / 3.0)) * math.log(r)
    )


def supersolution_c2(r: float) -> float:
    """Coefficient of U(-2/3, 2/3; z^3/9) in the supersolution profile Q.

    U(-2/3, 2/3; y) grows like y^{2/3} for y -> +inf and like -2|y|^{2/3} for
    y -> -inf; matching the wall condition S(0,-v) = S(0,rv) gives
    c2 = 9^{2/3} (1 - r^2) / (2 (2 + r^2)).
    """
    r = _check_r(r)
    return NINE_23 * (1.0 - r * r) / (2.0 * (2.0 + r * r))


@dataclass(frozen=True)
class RestitutionConstants:
    """All r-derived scalars, computed once per restitution coefficient."""

    r: float
    r_c: float
    alpha: float
    beta: float
    k_alpha: float
    kappa: float
    c_star: float | None

    @classmethod
    def from_r(cls, r: float) -> "RestitutionConstants":
        r = _check_r(r)
        al = alpha_of_r(r)
        return cls(
            r=r,
            r_c=R_C,
            alpha=al,
            beta=-al - 2.0 / 3.0,
            k_alpha=k_gamma(al),
            kappa=kappa_of_r(r),
            c_star=c_star_closed_form(r) if r < R_C else None,
        )

    @property
    def subcritical(self) -> bool:
        return self.r < self.r_c

    @property
    def k_beta(self) -> float:
        return self.r ** (3.0 * self.beta)

    def as_dict(self) -> dict:
        return asdict(self)
