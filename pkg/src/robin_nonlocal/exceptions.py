"""Exception and warning classes raised across the package."""


class RobinNonlocalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGrid(RobinNonlocalError, ValueError):
    pass


class InvalidField(RobinNonlocalError, ValueError):
    pass


class NonElliptic(RobinNonlocalError, ValueError):
    pass


class InvalidFace(RobinNonlocalError, IndexError):
    pass


class OverlappingPartition(RobinNonlocalError, ValueError):
    pass


class UncoveredFace(RobinNonlocalError, ValueError):
    pass


class SingularSystem(RobinNonlocalError, ArithmeticError):
    pass


class NeumannDivergence(RobinNonlocalError, ArithmeticError):
    pass


class NotEquilibrium(RobinNonlocalError):
    pass


class InsufficientDecay(RobinNonlocalError):
    pass


class NotComparable(RobinNonlocalError, ValueError):
    pass


class DefectivePrincipalEigenvalue(RobinNonlocalError, ArithmeticError):
    pass


class ScenarioError(RobinNonlocalError, ValueError):
    """Scenario file could not be parsed or failed validation."""


class StabilityViolation(UserWarning):
    """Explicit part of a theta step exceeds its stability bound."""


class PecletWarning(UserWarning):
    """Mesh Peclet number >= 1; the central scheme may lose positivity."""


class IllConditionedEigenbasis(UserWarning):
    """Eigenvector basis too ill-conditioned; a fallback path was used."""
