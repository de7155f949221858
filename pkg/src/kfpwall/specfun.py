"""Real-argument confluent hypergeometric functions.

Only the parameter families needed by the wall problem are supported:
Kummer ``M(a, b, z)`` for general real ``a`` and non-pole ``b``, and Tricomi
``U(a, b, z)`` for ``b`` in {2/3, 4/3}.  For ``z < 0`` the Tricomi function is
the real-valued continuation

    U(a, 2/3, z) = pi/sin(2pi/3) * [ M(a, 2/3, z) / (G(a+1/3) G(2/3))
                                    - cbrt(z) M(a+1/3, 4/3, z) / (G(a) G(4/3)) ]

with ``cbrt`` the real cube root.  With ``z = -zeta**3`` this is the profile
function ``Lambda_gamma(zeta)`` (``a = -gamma``).

Evaluation strategy for ``U(a, 2/3, z)``:

* ``z <= Z_SMALL``: connection formula above (``M`` by compensated series,
  or its large-argument expansion for ``|z| > 30``).
* ``z >= Z_ASYMP``: the algebraic asymptotic series ``z**-a sum ...``.
* in between: Taylor stepping of Kummer's ODE from ``Z_ASYMP`` inward, which
  is stable because ``U`` is the recessive solution for growing ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "HypergeometricParams",
    "ln_gamma",
    "gamma",
    "rgamma",
    "kummer_m",
    "kummer_m_scaled",
    "tricomi_u",
    "tricomi_u_deriv",
]

M_SWITCH = 30.0
Z_SMALL = 2.0
Z_ASYMP = 30.0
OVERFLOW_LOG = 700.0

_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_B_ALLOWED = (2.0 / 3.0, 4.0 / 3.0)


@dataclass(frozen=True)
class HypergeometricParams:
    """Validated parameter triple for a Tricomi evaluation."""

    a: float
    b: float
    z: float

    def __post_init__(self):
        if not any(abs(self.b - bb) < 1e-12 for bb in _B_ALLOWED):
            raise ValueError(f"b must be 2/3 or 4/3, got {self.b!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.z)):
            raise ValueError("a and z must be finite")

    def u(self) -> float:
        return tricomi_u(self.a, self.b, self.z)

    def m(self) -> float:
        return kummer_m(self.a, self.b, self.z)


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def _ln_gamma_pos(x: float) -> float:
    # Lanczos for x >= 0.5
    z = x - 1.0
    s = _LANCZOS_C[0]
    for k in range(1, 15):
        s += _LANCZOS_C[k] / (z + k)
    base = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(base) - base + math.log(s)


def ln_gamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign Gamma(x))``."""
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"Gamma has a pole at x = {x:g}")
    if x >= 0.5:
        return _ln_gamma_pos(x), 1
    # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    s = math.sin(math.pi * x)
    lg = math.log(math.pi / abs(s)) - _ln_gamma_pos(1.0 - x)
    return lg, (1 if s > 0 else -1)


def gamma(x: float) -> float:
    lg, sg = ln_gamma(x)
    return sg * math.exp(lg)


def rgamma(x: float) -> float:
    """Reciprocal Gamma, zero at the poles."""
    if _is_pole(float(x)):
        return 0.0
    lg, sg = ln_gamma(x)
    return sg * math.exp(-lg)


def _poch_ratio_series(a: float, b: float, y: float) -> float:
    """Kahan-summed sum_n (a)_n/(b)_n y^n/n!."""
    total = 1.0
    comp = 0.0
    term = 1.0
    n = 0
    while True:
        term *= (a + n) / (b + n) * y / (n + 1)
        n += 1
        t = term - comp
        new = total + t
        comp = (new - total) - t
        total = new
        if term == 0.0:
            break
        if n > y and abs(term) < 1e-17 * abs(total):
            break
        if n > 5000:
            raise ArithmeticError("Kummer series failed to converge")
    return total


def _asym_sum(p: float, q: float, w: float) -> tuple[float, float]:
    """Truncated sum_n (p)_n (q)_n / n! * w^n, stopped at the smallest term.

    Returns the sum and the magnitude of the first omitted term.
    """
    total = 1.0
    term = 1.0
    for n in range(400):
        nxt = term * (p + n) * (q + n) / (n + 1) * w
        if nxt == 0.0:
            return total, 0.0
        if abs(nxt) >= abs(term):
            return total, abs(nxt)
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            return total, abs(term)
    return total, abs(term)


def kummer_m_scaled(a: float, b: float, y: float) -> float:
    """``exp(-y) M(a, b, y)`` for ``y >= 0``."""
    if y < 0:
        raise ValueError("kummer_m_scaled needs y >= 0")
    if y <= M_SWITCH:
        return math.exp(-y) * _poch_ratio_series(a, b, y)
    # large y, both exponentially large and algebraic parts
    gb_l, gb_s = ln_gamma(b)
    out = 0.0
    err = 0.0
    ra = rgamma(a)
    if ra != 0.0:
        s1, e1 = _asym_sum(b - a, 1.0 - a, 1.0 / y)
        f1 = ra * math.exp(gb_l + (a - b) * math.log(y)) * gb_s
        out += f1 * s1
        err += abs(f1) * e1
    rba = rgamma(b - a)
    if rba != 0.0:
        s2, e2 = _asym_sum(a, 1.0 + a - b, -1.0 / y)
        f2 = math.cos(math.pi * a) * rba * gb_s * math.exp(gb_l - y - a * math.log(y))
        out += f2 * s2
        err += abs(f2) * e2
    if err > 1e-14 * abs(out) and y < OVERFLOW_LOG:
        # divergent tail still too large at this y: the series is safe here
        return math.exp(-y) * _poch_ratio_series(a, b, y)
    return out


def kummer_m(a: float, b: float, z: float) -> float:
    """Kummer's confluent hypergeometric function ``M(a, b, z)``."""
    a, b, z = float(a), float(b), float(z)
    if _is_pole(b):
        raise ValueError(f"M(a,b,z) undefined for b = {b:g}")
    if z == 0.0:
        return 1.0
    if z < 0.0:
        # Kummer transformation
        return kummer_m_scaled(b - a, b, -z)
    sc = kummer_m_scaled(a, b, z)
    if sc == 0.0:
        return 0.0
    lg = math.log(abs(sc)) + z
    if lg > OVERFLOW_LOG:
        raise OverflowError(
            f"M({a:g},{b:g},{z:g}) overflows double precision (log|M| ~ {lg:.1f})"
        )
    return sc * math.exp(z)


def _u_asym(a: float, b: float, z: float) -> float:
    return math.exp(-a * math.log(z)) * _asym_sum(a, 1.0 + a - b, -1.0 / z)[0]


def _u23_connection(a: float, z: float) -> float:
    # b = 2/3: pi/sin(2pi/3) = 2pi/sqrt(3)
    pref = 2.0 * math.pi / math.sqrt(3.0)
    g23 = gamma(2.0 / 3.0)
    g43 = gamma(4.0 / 3.0)
    r1 = rgamma(a + 1.0 / 3.0)
    r2 = rgamma(a)
    t1 = kummer_m(a, 2.0 / 3.0, z) * r1 / g23 if r1 != 0.0 else 0.0
    t2 = 0.0
    if r2 != 0.0 and z != 0.0:
        t2 = math.copysign(abs(z) ** (1.0 / 3.0), z) * kummer_m(a + 1.0 / 3.0, 4.0 / 3.0, z) * r2 / g43
    return pref * (t1 - t2)


def _taylor_step(a: float, b: float, z0: float, w: float, dw: float, s: float):
    """Advance (U, U') of z U'' + (b - z) U' - a U = 0 from z0 to z0 + s."""
    c_prev, c_cur = w, dw  # c_n, c_{n+1}
    val = w + dw * s
    der = dw
    sp = s  # s^(n+1)
    n = 0
    small = 0
    while n < 400:
        c_next = ((a + n) * c_prev - (n + 1) * (n + b - z0) * c_cur) / (z0 * (n + 2) * (n + 1))
        # contribution of c_{n+2}
        der += (n + 2) * c_next * sp
        sp *= s
        inc = c_next * sp
        val += inc
        c_prev, c_cur = c_cur, c_next
        n += 1
        if abs(inc) <= 1e-17 * abs(val) and abs((n + 1) * c_next * sp / s) <= 1e-17 * abs(der) + 1e-300:
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    return val, der


def _u_stepped(a: float, b: float, z: float) -> tuple[float, float]:
    """U and dU/dz for Z_SMALL < z < Z_ASYMP via inward Taylor stepping."""
    z0 = Z_ASYMP
    w = _u_asym(a, b, z0)
    dw = -a * _u_asym(a + 1.0, b + 1.0, z0)
    while z0 - z > 1e-15 * z0:
        h = min(0.45 * z0, z0 - z)
        w, dw = _taylor_step(a, b, z0, w, dw, -h)
        z0 -= h
    return w, dw


def _u23(a: float, z: float) -> float:
    if a == 0.0:
        return 1.0
    if z <= Z_SMALL:
        return _u23_connection(a, z)
    if z >= Z_ASYMP:
        return _u_asym(a, 2.0 / 3.0, z)
    return _u_stepped(a, 2.0 / 3.0, z)[0]


def _check_b(b: float) -> float:
    for bb in _B_ALLOWED:
        if abs(b - bb) < 1e-12:
            return bb
    raise ValueError(
        f"tricomi_u supports b in {{2/3, 4/3}} only (got b = {b!r}); "
        "use the limiting form of the connection formula for other b"
    )


def tricomi_u(a: float, b: float, z: float) -> float:
    """Tricomi ``U(a, b, z)`` for ``b`` in {2/3, 4/3} on the real line."""
    a, z = float(a), float(z)
    b = _check_b(float(b))
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    if b == _B_ALLOWED[0]:
        return _u23(a, z)
    # U(a, 4/3, z) = z^(-1/3) U(a - 1/3, 2/3, z)
    if z == 0.0:
        if rgamma(a) == 0.0:
            return _limit_u43_zero(a)
        raise ValueError("U(a, 4/3, z) is singular at z = 0")
    c = math.copysign(abs(z) ** (1.0 / 3.0), z)
    return _u23(a - 1.0 / 3.0, z) / c


def _limit_u43_zero(a: float) -> float:
    # a a nonpositive integer: U is a polynomial (Laguerre type), evaluate by the
    # terminating series U(-n, b, z) = (-1)^n (b)_n M(-n, b, z).
    n = int(round(-a))
    poch = 1.0
    for k in range(n):
        poch *= 4.0 / 3.0 + k
    return (-1.0) ** n * poch


def tricomi_u_deriv(a: float, b: float, z: float) -> float:
    """dU/dz for b = 2/3 using U' = -a U(a+1, b+1, z) and b-shifting."""
    b = _check_b(float(b))
    if b != _B_ALLOWED[0]:
        raise ValueError("tricomi_u_deriv implemented for b = 2/3 only")
    a, z = float(a), float(z)
    if a == 0.0:
        return 0.0
    if Z_SMALL < z < Z_ASYMP:
        return _u_stepped(a, b, z)[1]
    if z >= Z_ASYMP:
        return -a * _u_asym(a + 1.0, b + 1.0, z)
    # U(a+1, 5/3, z) = z^(-2/3) U(a+1/3, 1/3, z) is outside the supported b set;
    # use the recurrence U'(a,b,z) = U(a,b,z) - U(a, b+1, z) with b+1 = 5/3, and
    # U(a, 5/3, z) = z^(-2/3) U(a - 2/3, 1/3, z).  Simpler: differentiate the
    # connection formula term by term.
    pref = 2.0 * math.pi / math.sqrt(3.0)
    g23 = gamma(2.0 / 3.0)
    g43 = gamma(4.0 / 3.0)
    r1 = rgamma(a + 1.0 / 3.0)
    r2 = rgamma(a)
    # d/dz M(a,b,z) = a/b M(a+1,b+1,z)
    d1 = 0.0
    if r1 != 0.0:
        d1 = a / (2.0 / 3.0) * kummer_m(a + 1.0, 5.0 / 3.0, z) * r1 / g23
    d2 = 0.0
    if r2 != 0.0:
        if z == 0.0:
            raise ValueError("dU/dz is singular at z = 0 for b = 2/3")
        c = math.copysign(abs(z) ** (1.0 / 3.0), z)
        m = kummer_m(a + 1.0 / 3.0, 4.0 / 3.0, z)
        dm = (a + 1.0 / 3.0) / (4.0 / 3.0) * kummer_m(a + 4.0 / 3.0, 7.0 / 3.0, z)
        d2 = (m / (3.0 * c * c) + c * dm) * r2 / g43
    return pref * (d1 - d2)
