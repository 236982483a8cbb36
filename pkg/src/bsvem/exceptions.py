"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
``ValidationError`` (bad input, exit 1) and ``NumericalFailure`` (exit 2).
"""


class BSVEMError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BSVEMError, ValueError):
    """Invalid user input or malformed data."""


class NumericalFailure(BSVEMError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class NoInteriorCube(ValidationError):
    pass


class ProjectionFailure(NumericalFailure):
    pass


class DegenerateElement(NumericalFailure):
    pass


class OpenSurface(ValidationError):
    pass


class NonPlanarFace(ValidationError):
    pass


class SelfIntersectingFace(ValidationError):
    pass


class NegativeVolume(ValidationError):
    pass


class OpenCell(ValidationError):
    pass


class SingularProjector(NumericalFailure):
    pass


class MissingFaceOperators(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class IoFailure(ValidationError):
    pass


class NoConvergence(NumericalFailure):
    """Raised when an iterative solve stops before reaching its tolerance.

    The best iterate and the solver statistics are attached so callers can
    still inspect them.
    """

    def __init__(self, message, solution=None, stats=None):
        super().__init__(message)
        self.solution = solution
        self.stats = stats
