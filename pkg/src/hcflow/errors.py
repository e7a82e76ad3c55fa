"""Exception types raised across the package."""


class HCFError(Exception):
    """Base class for all package errors."""


class ValidationError(HCFError, ValueError):
    """Input data violates a structural invariant (antisymmetry, Jacobi, ...)."""


class NotAHomomorphismError(ValidationError):
    """A linear map fails to respect the Lie bracket."""

    def __init__(self, message, pair=None, deviation=None):
        super().__init__(message)
        self.pair = pair
        self.deviation = deviation


class InsufficientDataError(HCFError, ValueError):
    """Too few samples for a requested fit."""


class EvaluationError(HCFError, ArithmeticError):
    """A pointwise geometric quantity is undefined (e.g. a singular metric)."""


class IntegrationError(HCFError, RuntimeError):
    """The integrator failed before reaching its stopping criterion."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
