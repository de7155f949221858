"""Inelastic wall: incoming flux at speed u leaves at speed r u."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WallMap", "wall_map", "apply_wall", "wall_flux_balance"]


@dataclass(frozen=True, eq=False)
class WallMap:
    """Linear split of each incoming row's flux between two outgoing rows.

    ``src`` indexes incoming rows (|v| order), ``lo``/``hi`` the outgoing rows
    bracketing r|v|, ``w_lo`` the share sent to ``lo``.  Shares sum to one, so
    flux is conserved exactly and the mean outgoing velocity is r|v|.
    """

    src: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    w_lo: np.ndarray
    n_out: int

    def transfer(self, flux_in: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_out)
        np.add.at(out, self.lo, self.w_lo * flux_in[self.src])
        np.add.at(out, self.hi, (1.0 - self.w_lo) * flux_in[self.src])
        return out


def wall_map(speeds: np.ndarray, r: float) -> WallMap:
    """Map for a symmetric speed grid ``speeds`` (positive, increasing, uniform)."""
    n = speeds.size
    ds = speeds[1] - speeds[0] if n > 1 else 2 * speeds[0]
    pos = (r * speeds - speeds[0]) / ds
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    below = lo < 0
    lo[below] = 0
    frac[below] = 0.0
    above = lo >= n - 1
    lo[above] = n - 1
    frac[above] = 0.0
    hi = np.minimum(lo + 1, n - 1)
    # snap round-off so that r = 1 maps rows onto themselves exactly
    snap = frac < 1e-12
    frac[snap] = 0.0
    up = frac > 1 - 1e-12
    lo[up] = hi[up]
    frac[up] = 0.0
    return WallMap(src=np.arange(n), lo=lo, hi=hi, w_lo=1.0 - frac, n_out=n)


def apply_wall(values: np.ndarray, v: np.ndarray, r: float) -> np.ndarray:
    """Wall trace with outgoing (v > 0) entries rebuilt from incoming ones.

    ``values`` is the trace P(0, v_j) on a symmetric v grid; the result keeps
    the v < 0 entries and sets the v > 0 entries so that the outgoing flux in
    each row is the share of incoming flux reflected into it.
    """
    values = np.asarray(values, dtype=float)
    nh = v.size // 2
    speeds = v[nh:]
    inc = values[:nh][::-1]  # incoming, ordered by speed
    flux = speeds * inc
    out_flux = wall_map(speeds, r).transfer(flux)
    res = values.copy()
    res[nh:] = out_flux / speeds
    return res


def wall_flux_balance(values: np.ndarray, v: np.ndarray, dv: float) -> tuple[float, float]:
    """(outgoing flux, incoming flux) through x = 0 for a wall trace."""
    nh = v.size // 2
    out = float(np.sum(v[nh:] * values[nh:]) * dv)
    inc = float(np.sum(-v[:nh] * values[:nh]) * dv)
    return out, inc
