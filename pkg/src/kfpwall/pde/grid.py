"""Cell-centred phase-space grids, graded in x towards the singular corners."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PhaseGrid", "graded_faces", "make_grid"]


def graded_faces(length: float, n_coarse: int, delta: float, growth: float = 1.08) -> np.ndarray:
    """Faces on [0, length]: spacing delta/8 up to 2 delta, geometric growth, then ~length/n_coarse."""
    h0 = delta / 8.0
    h1 = max(length / n_coarse, h0)
    faces = [0.0]
    while faces[-1] < 2.0 * delta - 1e-12 * delta:
        faces.append(faces[-1] + h0)
    h = h0
    while h * growth < h1:
        h *= growth
        faces.append(faces[-1] + h)
    rem = length - faces[-1]
    if rem <= 0:
        raise ValueError("domain too short for the requested excision scale")
    n = max(1, math.ceil(rem / h1 - 1e-9))
    faces.extend(faces[-1] + rem * np.arange(1, n + 1) / n)
    out = np.asarray(faces)
    out[-1] = length
    return out


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Cells [x_faces[i], x_faces[i+1]] x [v_faces[j], v_faces[j+1]].

    The v grid is uniform and symmetric with v = 0 on a face, so row j and
    row nv-1-j carry opposite velocities.
    """

    x_faces: np.ndarray
    v_faces: np.ndarray
    mode: str
    delta: float

    @property
    def nx(self) -> int:
        return self.x_faces.size - 1

    @property
    def nv(self) -> int:
        return self.v_faces.size - 1

    @property
    def x(self) -> np.ndarray:
        return 0.5 * (self.x_faces[1:] + self.x_faces[:-1])

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.x_faces)

    @property
    def v(self) -> np.ndarray:
        return 0.5 * (self.v_faces[1:] + self.v_faces[:-1])

    @property
    def dv(self) -> float:
        return float(self.v_faces[1] - self.v_faces[0])

    @property
    def length(self) -> float:
        return float(self.x_faces[-1])

    @property
    def vmax(self) -> float:
        return float(self.v_faces[-1])

    def cell_mass(self, values: np.ndarray) -> float:
        return float(np.sum(values.sum(axis=1) * self.dx) * self.dv)

    def cfl_dt(self) -> float:
        """Largest transport step with Courant number one."""
        return float(self.dx.min() / np.abs(self.v).max())


def make_grid(mode: str = "halfline", length: float = 3.0, vmax: float = 6.0, nx: int = 150,
              nv: int = 480, delta: float = 0.01) -> PhaseGrid:
    if mode not in ("halfline", "strip"):
        raise ValueError(f"unknown mode {mode!r}")
    if nv % 2:
        raise ValueError("nv must be even so that v = 0 is a cell face")
    if not (delta > 0 and vmax > 0 and length > 0):
        raise ValueError("delta, V and L must be positive")
    if mode == "halfline":
        xf = graded_faces(length, nx, delta)
    else:
        half = graded_faces(0.5, max(1, nx // 2), delta)
        xf = np.concatenate([half, 1.0 - half[-2::-1]])
    vf = np.linspace(-vmax, vmax, nv + 1)
    return PhaseGrid(x_faces=xf, v_faces=vf, mode=mode, delta=float(delta))
