"""Exception types shared across the package."""


class BetaWalkError(Exception):
    """Base class for all package errors."""


class DomainError(BetaWalkError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(BetaWalkError, ArithmeticError):
    """An iterative routine (series, root finder) failed to converge."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature exceeded its refinement budget."""


class NumericDegeneracyError(BetaWalkError, ArithmeticError):
    """A computed quantity left its legal range by more than rounding."""


class ValidationError(BetaWalkError, ValueError):
    """Malformed user input (configuration, lattice points, flags)."""
