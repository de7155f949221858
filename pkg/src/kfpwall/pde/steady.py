"""Long-time limits in the strip 0 <= x <= 1 with inelastic walls at both ends."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..exponents import RestitutionConstants
from .field import BoundaryRegime, OriginState, PDEConfig, PhaseSpaceField, init_field
from .solver import PDESolver

__all__ = ["StripSteadyState", "steady_state_strip", "symmetry_residual"]


def symmetry_residual(values: np.ndarray) -> float:
    """max |F(x, v) - F(1 - x, -v)| / max |F| on a mirror-symmetric strip grid."""
    return float(np.max(np.abs(values - values[::-1, ::-1])) / max(np.max(np.abs(values)), 1e-300))


@dataclass
class StripSteadyState:
    field: PhaseSpaceField
    origins: tuple[OriginState, ...]
    converged: bool
    t: float
    residual_history: list = field(default_factory=list)

    @property
    def m1(self) -> float:
        return self.origins[0].m

    @property
    def m2(self) -> float:
        return self.origins[1].m

    @property
    def interior_mass(self) -> float:
        return self.field.interior_mass()

    @property
    def symmetry(self) -> float:
        return symmetry_residual(self.field.values)


def steady_state_strip(constants: RestitutionConstants, bc: "str | BoundaryRegime", tol: float = 1e-3,
                       config: PDEConfig | None = None, t_max: float = 40.0, check_every: float = 0.25,
                       raise_on_failure: bool = True) -> StripSteadyState:
    """March the strip problem until the state changes by less than ``tol`` per unit time.

    The change is measured as the L1 norm of the density increment plus the
    change in the corner masses, so it is an absolute quantity in units of
    total mass.
    """
    regime = BoundaryRegime.parse(bc)
    base = config or PDEConfig(nx=40, nv=240, V=5.0, delta=0.01)
    cfg = replace(base, mode="strip", L=1.0, r=constants.r, bc=str(regime), t_end=t_max)
    solver = PDESolver.from_config(cfg)
    f, origins = init_field(cfg)
    area = f.grid.dx[:, None] * f.grid.dv
    n_chk = max(1, round(check_every / solver.dt))
    dt = check_every / n_chk
    history = []
    prev_v, prev_m = f.values.copy(), np.array([o.m for o in origins])
    while f.t < t_max - 1e-12:
        for _ in range(n_chk):
            f, origins = solver.step(f, origins, dt)
        m = np.array([o.m for o in origins])
        change = (float(np.sum(np.abs(f.values - prev_v) * area)) + float(np.sum(np.abs(m - prev_m)))) / check_every
        history.append((f.t, change))
        if change < tol:
            return StripSteadyState(f, origins, True, f.t, history)
        prev_v, prev_m = f.values.copy(), m
    if raise_on_failure:
        tail = ", ".join(f"{t:.2f}:{c:.2e}" for t, c in history[-5:])
        raise RuntimeError(f"strip problem did not settle by t = {t_max} (last changes {tail})")
    return StripSteadyState(f, origins, False, f.t, history)
