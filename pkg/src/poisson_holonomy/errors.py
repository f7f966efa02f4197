"""Exception hierarchy."""


class PoissonError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PoissonError, ValueError):
    pass


class JacobiError(PoissonError, ValueError):
    """A bivector fails the Jacobi identity at some probe point."""

    def __init__(self, message, point=None, defect=None):
        super().__init__(message)
        self.point = point
        self.defect = defect


class RankError(PoissonError):
    """Odd numerical rank, or a rank change along a path."""


class NotLeafTangent(PoissonError):
    """A tangent path is not tangent to the symplectic foliation."""


class CotangentConditionError(PoissonError, ValueError):
    """A covector path does not satisfy sharp(alpha) = gamma'."""


class EndpointMismatch(PoissonError, ValueError):
    pass


class ReparameterizationError(PoissonError, ValueError):
    pass


class DriftError(PoissonError):
    """The integrated flow does not reproduce the base path."""


class LeafPreservationError(PoissonError):
    pass


class BlowUpError(PoissonError):
    pass


class LogDomainError(PoissonError):
    """Principal logarithm unavailable; the coset test is inconclusive."""


class ConventionError(PoissonError):
    """Frozen sign conventions disagree with the self-test."""


class ManifestError(PoissonError, ValueError):
    pass
