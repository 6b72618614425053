"""Exception hierarchy.

Every error raised by the package derives from :class:`NahmError`. The CLI maps
:class:`ValidationError` to exit status 2, :class:`NoConvergence` to 3 and
:class:`SerializationError` / ``OSError`` to 4.
"""


class NahmError(Exception):
    """Base class for all package errors."""


class ValidationError(NahmError):
    """Invalid input data (type data, shapes, parameters)."""


class NonIncreasingMasses(ValidationError):
    pass


class ParityViolation(ValidationError):
    pass


class EmptyInterval(ValidationError):
    pass


class NonPositiveCharge(ValidationError):
    pass


class NonPositiveKappa(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class SingularGauge(ValidationError):
    pass


class OffBlockViolation(ValidationError):
    def __init__(self, message, value=0.0, index=None):
        super().__init__(message)
        self.value = value
        self.index = index


class ZeroPoint(ValidationError):
    pass


class WeightOutOfRange(ValidationError):
    pass


class UnsupportedType(ValidationError):
    pass


class ZeroHorosphere(ValidationError):
    pass


class DegenerateMonad(NahmError):
    pass


class DegenerateSmallMonad(DegenerateMonad):
    pass


class StencilAcrossPole(DegenerateSmallMonad):
    pass


class NormalizationFailed(NahmError):
    pass


class SingularGamma(NormalizationFailed):
    def __init__(self, message, site=None, margin=0.0):
        super().__init__(message)
        self.site = site
        self.margin = margin


class PoleAtX(NahmError):
    pass


class DegenerateFlag(NahmError):
    pass


class NoConvergence(NahmError):
    """Solver did not reach tolerance with a stable solution.

    ``best`` carries the lowest-residual candidate found and ``report`` its
    :class:`~nahm.solver.SolveReport`.
    """

    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


class SerializationError(NahmError):
    pass


class SchemaMismatch(SerializationError):
    pass


class ParseError(SerializationError):
    pass
