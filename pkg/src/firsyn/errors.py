"""Exception types shared across the toolkit."""


class FirsynError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(FirsynError, ValueError):
    """Operands have incompatible or invalid shapes."""


class ContractError(FirsynError, ValueError):
    """An input violates a documented precondition (non-finite entries,
    asymmetry beyond tolerance, malformed problem data, ...)."""


class ConvergenceError(FirsynError, RuntimeError):
    """An iterative method exhausted its budget without meeting its
    accuracy target.  The message reports the residual or margin reached."""


class SingularMatrixError(FirsynError, ArithmeticError):
    """A linear solve hit a (numerically) singular operator."""


class DegenerateSolutionError(FirsynError, RuntimeError):
    """A solver returned a point that cannot be turned into a usable
    design (e.g. a singular change-of-variables block).  The point is
    reported rather than silently perturbed."""
