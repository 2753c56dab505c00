"""Exception types shared across the package."""


class LyapvarError(Exception):
    """Base class for all package errors."""


class ParameterError(LyapvarError):
    """Invalid argument or configuration value."""


class DomainError(LyapvarError):
    """Input field violates a mathematical precondition (e.g. nonpositive density)."""


class DegeneratePotentialError(LyapvarError):
    """Realized potential is identically zero or otherwise unusable."""


class DegenerateRateError(LyapvarError):
    """Zero-drift decay rate vanishes, so the decay exponent is undefined (-inf)."""


class ConvergenceError(LyapvarError):
    """Iterative solver hit its cap before reaching tolerance.

    Carries the best iterate produced so far in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class OptimizationError(LyapvarError):
    """Outer optimizer diverged (NaN objective). Carries the trace in ``trace``."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NumericalError(LyapvarError):
    """Internal numerical failure (bracket failure, sign change, instability)."""


class WeightUnderflowError(LyapvarError):
    """All Monte Carlo weights underflowed; use a shorter horizon or larger floor."""


class ResolutionError(LyapvarError):
    """A scan grid is too coarse to bracket the quantity being recovered."""


class StatisticalValidityError(LyapvarError):
    """Too few surviving Monte Carlo contributions. Carries partial results in ``partial``."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(LyapvarError):
    """Malformed run configuration file."""
