"""Half-lattice random walk with a sticky site at the origin.

A walker on {0, 1, ..., N} moves to a neighbour with probability 1/2 per step
of duration h^2.  From site 0 it escapes to site 1 with probability lambda and
otherwise stays.  The occupation vector obeys a row-stochastic master equation
whose continuum limit is U_t = U_xx / 2 with a boundary condition set by how
lambda scales with h:

* lambda fixed in (0, 1]   -> Neumann, U_x(0) = 0
* lambda = 0               -> Dirichlet, U(0) = 0, mass piles up at the origin
* lambda = mu h            -> dynamic, m = U(0)/(2 mu), dm/dt = U_x(0)/2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu
from scipy.special import ndtr

__all__ = [
    "LatticeDist",
    "BoundaryCondition",
    "CompareResult",
    "step_master",
    "evolve",
    "reference_profile",
    "continuum_compare",
]

CENTER = 1.0
SIGMA = 0.2
LENGTH = 4.0


@dataclass
class LatticeDist:
    h: float
    lam: float
    p: np.ndarray
    k: int = 0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        self.p = np.asarray(self.p, dtype=float)

    @classmethod
    def gaussian(cls, h: float, lam: float, center: float = CENTER, sigma: float = SIGMA,
                 length: float = LENGTH) -> "LatticeDist":
        n = math.ceil(length / h)
        x = h * np.arange(n + 1)
        p = np.exp(-0.5 * ((x - center) / sigma) ** 2)
        p[0] = 0.0
        p /= p.sum()
        return cls(h=h, lam=lam, p=p, k=0)

    @property
    def t(self) -> float:
        return self.k * self.h * self.h

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(self.p.size)

    def mass(self) -> float:
        return float(math.fsum(self.p))

    def interior_mass(self) -> float:
        return float(math.fsum(self.p[1:]))


def _step_inplace(p: np.ndarray, out: np.ndarray, lam: float) -> None:
    out[2:-1] = 0.5 * (p[1:-2] + p[3:])
    out[1] = 0.5 * p[2] + lam * p[0]
    out[0] = 0.5 * p[1] + (1.0 - lam) * p[0]
    # reflecting far end: a walker at N stays with probability 1/2
    out[-1] = 0.5 * (p[-2] + p[-1])
    out[-2] += 0.0  # interior rule already covers N-1 (receives p[N]/2)


def step_master(dist: LatticeDist) -> LatticeDist:
    """One synchronous update of the master equation."""
    out = np.empty_like(dist.p)
    _step_inplace(dist.p, out, dist.lam)
    return replace(dist, p=out, k=dist.k + 1)


def evolve(dist: LatticeDist, n_steps: int) -> LatticeDist:
    p = dist.p.copy()
    buf = np.empty_like(p)
    for _ in range(int(n_steps)):
        _step_inplace(p, buf, dist.lam)
        p, buf = buf, p
    return replace(dist, p=p, k=dist.k + int(n_steps))


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str  # "neumann" | "dirichlet" | "dynamic"
    mu: float | None = None

    def __post_init__(self):
        if self.kind not in ("neumann", "dirichlet", "dynamic"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "dynamic" and not (self.mu and self.mu > 0):
            raise ValueError("dynamic boundary condition needs mu > 0")

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        text = text.strip().lower()
        if text.startswith("dynamic"):
            mu = float(text.split(":", 1)[1]) if ":" in text else 1.0
            return cls("dynamic", mu)
        return cls(text)


@dataclass
class CompareResult:
    max_error: float
    m_lattice: float
    m_reference: float
    t: float
    u0_reference: float
    warning: str | None = None
    detail: dict = field(default_factory=dict)


def _image_solution(x: np.ndarray, t: float, sign: float, center: float, sigma: float) -> np.ndarray:
    """Heat kernel (variance t) convolution of the half-line truncated Gaussian, plus/minus its image."""
    z = ndtr(center / sigma)
    s2 = sigma * sigma + t

    def part(xx):
        mu_p = (t * center + sigma * sigma * xx) / s2
        sd_p = math.sqrt(sigma * sigma * t / s2)
        dens = np.exp(-0.5 * (xx - center) ** 2 / s2) / math.sqrt(2 * math.pi * s2)
        return dens * ndtr(mu_p / sd_p)

    return (part(x) + sign * part(-x)) / z


def _cn_dynamic(mu: float, h_ref: float, t: float, center: float, sigma: float,
                length: float = LENGTH) -> tuple[np.ndarray, np.ndarray, float]:
    """Crank-Nicolson solve of U_t = U_xx/2 with m = U(0)/(2 mu), dm/dt = U_x(0)/2.

    Conservative finite volumes: node 0 owns a half cell of width h_ref/2 plus
    the origin atom, giving capacity h_ref/2 + 1/(2 mu).  Returns nodes, U, m.
    """
    n = int(round(length / h_ref))
    x = h_ref * np.arange(n + 1)
    u = np.exp(-0.5 * ((x - center) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi) * ndtr(center / sigma))
    cap = np.full(n + 1, h_ref)
    cap[0] = 0.5 * h_ref + 1.0 / (2.0 * mu)
    cap[-1] = 0.5 * h_ref
    d = 0.5 / h_ref  # diffusive conductance between nodes
    main = np.full(n + 1, -2.0 * d)
    main[0] = main[-1] = -d
    off = np.full(n, d)
    A = sparse.diags([off, main, off], [-1, 0, 1], format="csc")  # flux balance
    Cinv = sparse.diags(1.0 / cap)
    L = Cinv @ A
    n_steps = max(200, int(math.ceil(t / (0.25 * h_ref))))
    dt = t / n_steps
    eye = sparse.identity(n + 1, format="csc")
    lhs = splu((eye - 0.5 * dt * L).tocsc())
    rhs = (eye + 0.5 * dt * L).tocsr()
    for _ in range(n_steps):
        u = lhs.solve(rhs @ u)
    return x, u, float(u[0] / (2.0 * mu))


def reference_profile(bc: BoundaryCondition, x: np.ndarray, t: float, h: float | None = None,
                      center: float = CENTER, sigma: float = SIGMA) -> tuple[np.ndarray, float, float]:
    """Reference U(x, t), origin mass m(t) and U(0, t)."""
    if bc.kind == "neumann":
        u = _image_solution(x, t, 1.0, center, sigma)
        return u, 0.0, float(_image_solution(np.array([0.0]), t, 1.0, center, sigma)[0])
    if bc.kind == "dirichlet":
        u = _image_solution(x, t, -1.0, center, sigma)
        xf = np.linspace(0.0, 12.0, 24001)
        uf = _image_solution(xf, t, -1.0, center, sigma)
        interior = np.trapezoid(uf, xf)
        return u, float(1.0 - interior), 0.0
    if h is None:
        raise ValueError("dynamic reference needs the lattice spacing h")
    xr, ur, m = _cn_dynamic(bc.mu, h / 8.0, t, center, sigma)
    return np.interp(x, xr, ur), m, float(ur[0])


def continuum_compare(dist: LatticeDist, bc: BoundaryCondition) -> CompareResult:
    """Compare P_n/h (n >= 1) against the continuum reference at t = k h^2."""
    t = dist.t
    warning = None
    if dist.k < 100:
        warning = f"only {dist.k} steps: not in the continuum regime"
    x = dist.x[1:]
    u_ref, m_ref, u0 = reference_profile(bc, x, t, h=dist.h)
    err = np.abs(dist.p[1:] / dist.h - u_ref)
    return CompareResult(
        max_error=float(err.max()),
        m_lattice=float(dist.p[0]),
        m_reference=m_ref,
        t=t,
        u0_reference=u0,
        warning=warning,
        detail={"h": dist.h, "lambda": dist.lam, "k": dist.k, "bc": bc.kind, "mu": bc.mu},
    )
