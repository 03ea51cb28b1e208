"""Finite-volume solvers for the 1D/2D shallow-water Exner sediment system."""

from exner.core import (
    DEFAULT_GRAVITY,
    H_DRY,
    GrassParams,
    Grid1D,
    Grid2D,
    HyperbolicityError,
    State1D,
    State2D,
    WaveAnalysis,
    beta_coefficient,
    eigenvalues_asymptotic,
    eigenvalues_exact,
    grass_flux_1d,
    grass_flux_2d,
)

__version__ = "0.1.0"
