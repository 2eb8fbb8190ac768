"""Exception hierarchy shared by every covfuse module."""


class CovfuseError(Exception):
    """Base class for all covfuse errors."""


class InvalidInputError(CovfuseError, ValueError):
    """Malformed numeric input (non-finite entries, asymmetric covariance, bad weights)."""


class DimensionError(InvalidInputError):
    """Operands whose shapes do not agree."""


class SingularMatrixError(CovfuseError, ArithmeticError):
    """A matrix that must be positive definite is (numerically) singular."""


class ConditioningError(SingularMatrixError):
    """Condition number above the accepted limit."""


class InconsistentJointError(CovfuseError):
    """Cross-covariance blocks that make the assembled joint covariance non-PSD."""


class DegenerateTripleError(InvalidInputError):
    """Ellipsoid triple with b^T A^-1 b - c <= 0 (empty or single-point set)."""


class InfeasibleError(CovfuseError):
    """No strictly feasible starting point could be constructed."""
