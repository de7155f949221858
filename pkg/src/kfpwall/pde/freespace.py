"""Whole-line Gaussian solutions of P_t + v P_x = P_vv (Kolmogorov kernel).

With r = 1 the wall is a mirror, so the half-line solution from a datum that is
even under (x, v) -> (-x, -v) is the restriction of the whole-line solution.
"""
from __future__ import annotations

import numpy as np

from .field import PDEConfig
from .grid import PhaseGrid

__all__ = ["kolmogorov_moments", "gaussian_density", "symmetric_reference", "l1_deviation"]


def kolmogorov_moments(mean, cov, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance at time t of a Gaussian datum under dX = V dt, dV = sqrt(2) dB."""
    a = np.array([[1.0, t], [0.0, 1.0]])
    k = np.array([[2.0 * t ** 3 / 3.0, t * t], [t * t, 2.0 * t]])
    return a @ np.asarray(mean, float), a @ np.asarray(cov, float) @ a.T + k


def gaussian_density(x, v, mean, cov) -> np.ndarray:
    dx = np.asarray(x) - mean[0]
    dv = np.asarray(v) - mean[1]
    inv = np.linalg.inv(cov)
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dv + inv[1, 1] * dv * dv
    return np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(np.linalg.det(cov)))


def symmetric_reference(config: PDEConfig, grid: PhaseGrid, t: float, n_gauss: int = 3) -> np.ndarray:
    """Cell averages at time t of the blob plus its image, on ``grid``."""
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    s, w = 0.5 * (gx + 1.0), 0.5 * gw
    xs = grid.x_faces[:-1, None] + grid.dx[:, None] * s[None, :]
    vs = grid.v_faces[:-1, None] + grid.dv * s[None, :]
    cov0 = np.diag([config.sigma_x ** 2, config.sigma_v ** 2])
    out = np.zeros((grid.nx, grid.nv))
    for sign in (1.0, -1.0):
        mean, cov = kolmogorov_moments([sign * config.x0, sign * config.v0], cov0, t)
        for a, wa in zip(range(n_gauss), w):
            for b, wb in zip(range(n_gauss), w):
                out += wa * wb * gaussian_density(xs[:, a][:, None], vs[:, b][None, :], mean, cov)
    return out


def l1_deviation(values: np.ndarray, reference: np.ndarray, grid: PhaseGrid) -> float:
    area = grid.dx[:, None] * grid.dv
    return float(np.sum(np.abs(values - reference) * area) / np.sum(np.abs(reference) * area))
