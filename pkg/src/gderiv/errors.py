"""Exception hierarchy shared across the package."""


class GDerivError(Exception):
    """Base class for all gderiv errors."""


class EvaluationError(GDerivError):
    """A covariance or kernel evaluation produced a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class DomainError(GDerivError, ValueError):
    """An argument lies outside the supported mathematical domain."""


class SingularSpan(GDerivError):
    """A Gram matrix is singular or ill-conditioned beyond the configured bound.

    ``rcond`` carries the reciprocal condition estimate that triggered the error.
    """

    def __init__(self, message: str, rcond: float = 0.0):
        super().__init__(message)
        self.rcond = rcond


class DegenerateFamily(GDerivError):
    """Gram-Schmidt hit a (near-)zero pivot. ``index`` is the 0-based offender."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class DegenerateVariable(GDerivError):
    """A conditioning variable has zero variance."""


class PreconditionFailed(GDerivError):
    """A documented precondition of an operation does not hold.

    ``detail`` optionally carries supporting evidence (e.g. a Verdict).
    """

    def __init__(self, message: str, detail=None):
        super().__init__(message)
        self.detail = detail


class ResolutionError(GDerivError):
    """A sampled grid is too coarse for the requested operation."""


class ContractError(GDerivError):
    """Required data is missing from an input object (e.g. Wiener increments)."""


class EstimatorError(GDerivError):
    """A Monte Carlo estimator cannot be formed (degenerate inputs)."""


class ConfigError(GDerivError):
    """Invalid experiment configuration. ``field`` names the offending entry."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field
