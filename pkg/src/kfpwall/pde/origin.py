"""Two-profile expansion at the singular corner: basis, fit and projection."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..exponents import RestitutionConstants
from ..profiles import g_gamma
from .field import BoundaryRegime, PhaseSpaceField
from .grid import PhaseGrid

__all__ = ["OriginBasis", "build_basis", "fit_origin_coeffs", "project_coeffs", "COND_WARN", "COND_FAIL"]

log = logging.getLogger(__name__)

COND_WARN = 1e3
COND_FAIL = 1e6
RING_OUTER = 8.0


def _cell_average(gamma, xa, xb, va, vb, n):
    gx, gw = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (gx + 1.0)
    ws = 0.5 * gw
    if xa == 0.0:
        xs = xb * s ** 3  # soften the x^gamma endpoint singularity
        wx = ws * 3.0 * s * s * xb
    else:
        xs = xa + (xb - xa) * s
        wx = ws * (xb - xa)
    vs = va + (vb - va) * s
    wv = ws * (vb - va)
    tot = 0.0
    for xi, wxi in zip(xs, wx):
        for vj, wvj in zip(vs, wv):
            tot += wxi * wvj * g_gamma(gamma, float(xi), float(vj))
    return tot / ((xb - xa) * (vb - va))


@dataclass(frozen=True, eq=False)
class OriginBasis:
    """Cell averages of G_alpha and G_{-2/3} on the fit ring and the excised set.

    Index arrays refer to the corner-0 orientation; the x = 1 corner of a strip
    uses the same arrays on the values flipped in both axes.
    """

    constants: RestitutionConstants
    delta: float
    ring: tuple[np.ndarray, np.ndarray]
    excised: tuple[np.ndarray, np.ndarray]
    ring_alpha: np.ndarray
    ring_m23: np.ndarray
    exc_alpha: np.ndarray
    exc_m23: np.ndarray
    weights: np.ndarray
    cond: float
    ring_smooth: np.ndarray
    exc_smooth: np.ndarray

    def design(self) -> np.ndarray:
        cols = [self.ring_alpha[:, None], self.ring_m23[:, None], self.ring_smooth]
        return np.hstack(cols) * self.weights[:, None]


def _masks(grid: PhaseGrid, delta: float):
    X, V = np.meshgrid(grid.x, grid.v, indexing="ij")
    rho = X + np.abs(V) ** 3
    if grid.mode == "strip":
        near = X < 0.5
        exc = (rho < delta) & near
        ring = (rho >= delta) & (rho <= RING_OUTER * delta) & near
    else:
        exc = rho < delta
        ring = (rho >= delta) & (rho <= RING_OUTER * delta)
    return np.nonzero(ring), np.nonzero(exc)


def _smooth_terms(grid: PhaseGrid, idx, delta: float) -> np.ndarray:
    """Cell averages of 1, x, v, v^2, x v in units of the ring scale."""
    xf, vf = grid.x_faces, grid.v_faces
    i, j = idx
    xc = 0.5 * (xf[i] + xf[i + 1]) / delta
    vc = 0.5 * (vf[j] + vf[j + 1]) / delta ** (1.0 / 3.0)
    hv = (vf[j + 1] - vf[j]) / delta ** (1.0 / 3.0)
    return np.column_stack([np.ones_like(xc), xc, vc, vc * vc + hv * hv / 12.0, xc * vc])


def _weighted_cond(a: np.ndarray) -> float:
    a = a / np.linalg.norm(a, axis=0)
    s = np.linalg.svd(a, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def build_basis(grid: PhaseGrid, constants: RestitutionConstants, delta: float | None = None) -> OriginBasis:
    delta = grid.delta if delta is None else float(delta)
    ring, exc = _masks(grid, delta)
    if ring[0].size < 4:
        raise ValueError("fit ring holds too few cells; refine the grid or enlarge delta")
    xf, vf = grid.x_faces, grid.v_faces
    a, m = constants.alpha, -2.0 / 3.0

    def averages(idx, n):
        ga = np.empty(idx[0].size)
        gm = np.empty(idx[0].size)
        for k, (i, j) in enumerate(zip(*idx)):
            cell = (xf[i], xf[i + 1], vf[j], vf[j + 1])
            ga[k] = _cell_average(a, *cell, n)
            gm[k] = _cell_average(m, *cell, n)
        return ga, gm

    ra, rm = averages(ring, 3)
    ea, em = averages(exc, 4)
    w = 1.0 / np.maximum(np.abs(rm), 1e-300)
    cond = _weighted_cond(np.column_stack([ra, rm]) * w[:, None])
    if cond > COND_WARN:
        log.warning("origin fit condition number %.3g exceeds %.0g; consider a larger delta", cond, COND_WARN)
    return OriginBasis(constants, delta, ring, exc, ra, rm, ea, em, w, cond,
                       _smooth_terms(grid, ring, delta), _smooth_terms(grid, exc, delta))


def _corner_view(values: np.ndarray, corner: int) -> np.ndarray:
    return values if corner == 0 else values[::-1, ::-1]


def fit_origin_coeffs(field: PhaseSpaceField, delta: float, constants: RestitutionConstants | None = None,
                      basis: OriginBasis | None = None, corner: int = 0) -> tuple[float, float]:
    """Weighted least-squares (a_alpha, a_m23) of P on the ring delta <= x + |v|^3 <= 8 delta."""
    if basis is None:
        if constants is None:
            raise ValueError("need constants or a prebuilt basis")
        basis = build_basis(field.grid, constants, delta)
    if basis.cond > COND_FAIL:
        raise ArithmeticError(f"ill-conditioned origin fit (cond {basis.cond:.3g}); use a larger delta")
    vals = _corner_view(field.values, corner)[basis.ring]
    coef, *_ = np.linalg.lstsq(basis.design(), vals * basis.weights, rcond=None)
    return float(coef[0]), float(coef[1])


def project_coeffs(values_ring: np.ndarray, basis: OriginBasis, regime: BoundaryRegime,
                   m: float) -> tuple[float, float, np.ndarray]:
    """Least-squares fit restricted to the regime's constraint subspace.

    Returns (a_alpha, a_m23, smooth coefficients).  The smooth terms are never
    constrained; they carry the regular part of the density through the corner.
    """
    w = basis.weights[:, None]
    y = values_ring * basis.weights
    ca = basis.ring_alpha * basis.weights
    cm = basis.ring_m23 * basis.weights
    sm = basis.ring_smooth * w
    if regime.kind == "trap":
        c, *_ = np.linalg.lstsq(np.column_stack([cm, sm]), y, rcond=None)
        return 0.0, float(c[0]), c[1:]
    if regime.kind in ("nontrap", "super"):
        c, *_ = np.linalg.lstsq(np.column_stack([ca, sm]), y, rcond=None)
        return float(c[0]), 0.0, c[1:]
    a = regime.mu_star * m
    c, *_ = np.linalg.lstsq(np.column_stack([cm, sm]), y - a * ca, rcond=None)
    return a, float(c[0]), c[1:]
