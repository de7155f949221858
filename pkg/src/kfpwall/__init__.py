"""Numerical laboratory for the kinetic Fokker-Planck equation with an inelastic wall."""
from .exponents import RestitutionConstants, alpha_of_r, beta_of_r, critical_r, kappa_of_r

__version__ = "0.1.0"

__all__ = [
    "RestitutionConstants",
    "alpha_of_r",
    "beta_of_r",
    "critical_r",
    "kappa_of_r",
    "__version__",
]
