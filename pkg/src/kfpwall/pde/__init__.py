"""Finite-volume solver for the kinetic equation with an inelastic wall."""
from .field import BoundaryRegime, OriginState, PDEConfig, PhaseSpaceField, init_field, total_mass
from .grid import PhaseGrid, make_grid
from .origin import OriginBasis, build_basis, fit_origin_coeffs, project_coeffs
from .solver import PDERun, PDESolver, run, step
from .wall import apply_wall, wall_flux_balance, wall_map

__all__ = [
    "BoundaryRegime", "OriginState", "PDEConfig", "PhaseSpaceField", "init_field", "total_mass",
    "PhaseGrid", "make_grid", "OriginBasis", "build_basis", "fit_origin_coeffs", "project_coeffs",
    "PDERun", "PDESolver", "run", "step", "apply_wall", "wall_flux_balance", "wall_map",
]
