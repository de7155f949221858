"""Solver state: the density on the grid and the singular-point bookkeeping."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from ..exponents import R_C
from .grid import PhaseGrid, make_grid

__all__ = [
    "BoundaryRegime",
    "PDEConfig",
    "PhaseSpaceField",
    "OriginState",
    "init_field",
    "total_mass",
]


@dataclass(frozen=True)
class BoundaryRegime:
    """trap | nontrap | partial (with mu_star) | super."""

    kind: str
    mu_star: float | None = None

    def __post_init__(self):
        if self.kind not in ("trap", "nontrap", "partial", "super"):
            raise ValueError(f"unknown boundary regime {self.kind!r}")
        if self.kind == "partial" and not (self.mu_star and self.mu_star > 0):
            raise ValueError("partial trapping needs mu_star > 0")

    @classmethod
    def parse(cls, text: "str | BoundaryRegime") -> "BoundaryRegime":
        if isinstance(text, BoundaryRegime):
            return text
        t = text.strip().lower()
        alias = {"trapping": "trap", "nontrapping": "nontrap", "supercritical": "super"}
        if t.startswith("partial"):
            mu = float(t.split(":", 1)[1]) if ":" in t else 1.0
            return cls("partial", mu)
        return cls(alias.get(t, t))

    def check(self, r: float) -> None:
        if abs(r - R_C) < 1e-12:
            raise ValueError("the critical case r = r_c is not supported")
        if r > R_C and self.kind in ("trap", "partial"):
            raise ValueError(f"{self.kind} is defined only for r < r_c; use 'super'")
        if r < R_C and self.kind == "super":
            raise ValueError("'super' needs r > r_c")

    def __str__(self) -> str:
        return f"partial:{self.mu_star:g}" if self.kind == "partial" else self.kind


@dataclass(frozen=True)
class PDEConfig:
    r: float = 0.1
    bc: str = "trap"
    mode: str = "halfline"
    L: float = 3.0
    V: float = 6.0
    nx: int = 150
    nv: int = 480
    delta: float = 0.02
    x0: float = 0.5
    v0: float = 0.0
    sigma_x: float = 0.1
    sigma_v: float = 0.3
    symmetric: bool = False  # add the image blob at (-x0, -v0)
    m0: float = 0.0
    t_end: float = 0.5
    dt: float | None = None
    cfl: float = 0.9
    closure: str = "flux"
    snapshot_every: float | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.m0 < 0:
            raise ValueError("m0 must be nonnegative")
        if self.closure not in ("flux", "fit"):
            raise ValueError(f"unknown closure {self.closure!r}")
        if self.mode == "strip" and self.L != 1.0:
            object.__setattr__(self, "L", 1.0)
        BoundaryRegime.parse(self.bc).check(self.r)

    @property
    def regime(self) -> BoundaryRegime:
        return BoundaryRegime.parse(self.bc)

    def grid(self) -> PhaseGrid:
        return make_grid(self.mode, self.L, self.V, self.nx, self.nv, self.delta)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhaseSpaceField:
    grid: PhaseGrid
    values: np.ndarray
    t: float = 0.0

    def interior_mass(self) -> float:
        return self.grid.cell_mass(self.values)

    def copy(self) -> "PhaseSpaceField":
        return PhaseSpaceField(self.grid, self.values.copy(), self.t)


@dataclass
class OriginState:
    """Singular-point bookkeeping for one corner.

    ``a_alpha``/``a_m23`` are the regime-constrained coefficients imposed on the
    excised region; ``fit_alpha``/``fit_m23`` the unconstrained ring fit they
    were projected from.  ``m_flux`` accumulates the grid mass removed by the
    excision step that did not go to the corner profile: the mass handed to the
    singular point as seen from the grid side.  ``n_limited`` counts steps in
    which positivity of the corner profile overrode a_alpha = mu_star m.
    """

    m: float
    a_alpha: float
    a_m23: float
    bc: BoundaryRegime
    fit_alpha: float = math.nan
    fit_m23: float = math.nan
    m_flux: float = 0.0
    n_limited: int = 0
    history: dict = field(default_factory=dict, repr=False)


def _blob_cell_mass(grid: PhaseGrid, x0, v0, sx, sv):
    fx = ndtr((grid.x_faces - x0) / sx)
    fv = ndtr((grid.v_faces - v0) / sv)
    return np.outer(np.diff(fx), np.diff(fv))


def init_field(config: PDEConfig) -> tuple[PhaseSpaceField, tuple[OriginState, ...]]:
    """Gaussian blob (optionally plus its (x, v) -> (-x, -v) image), cell averaged.

    Returns the field and one OriginState per singular corner (two in strip mode).
    The total of interior mass and origin masses is 1.
    """
    grid = config.grid()
    cells = _blob_cell_mass(grid, config.x0, config.v0, config.sigma_x, config.sigma_v)
    if config.symmetric:
        cells = cells + _blob_cell_mass(grid, -config.x0, -config.v0, config.sigma_x, config.sigma_v)
    s = cells.sum()
    if not s > 0:
        raise ValueError("initial blob has no mass on the grid")
    n_corner = 2 if config.mode == "strip" else 1
    cells *= (1.0 - config.m0) / s
    values = cells / (grid.dx[:, None] * grid.dv)
    regime = config.regime
    origins = tuple(OriginState(m=config.m0 / n_corner, a_alpha=0.0, a_m23=0.0, bc=regime)
                    for _ in range(n_corner))
    return PhaseSpaceField(grid, values, 0.0), origins


def total_mass(field_: PhaseSpaceField, origin: "OriginState | tuple[OriginState, ...]") -> float:
    """Grid mass (cell-average quadrature, excised cells included) plus origin masses."""
    origins = origin if isinstance(origin, tuple) else (origin,)
    return math.fsum([field_.interior_mass()] + [o.m for o in origins])
