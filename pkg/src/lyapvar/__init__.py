"""Lyapunov exponents of Brownian motion in periodic potential.

Three independent routes to the same number: the variational formula over
densities and divergence-free fluxes, the spectral route through the quenched
free energy and its half-space transform, and direct Feynman-Kac Monte Carlo.
"""

__version__ = "0.1.0"

from . import corrector, functionals, gamma, grid, montecarlo, potential, spectral
from .errors import (
    ConfigError,
    ConvergenceError,
    DegeneratePotentialError,
    DegenerateRateError,
    DomainError,
    LyapvarError,
    NumericalError,
    OptimizationError,
    ParameterError,
    ResolutionError,
    StatisticalValidityError,
    WeightUnderflowError,
)
