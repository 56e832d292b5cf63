"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ScrambledError`, so callers (and the CLI) can catch one type.
"""


class ScrambledError(Exception):
    """Base class for all package errors."""


class SpectrumError(ScrambledError, ValueError):
    pass


class EmptySpectrum(SpectrumError):
    pass


class NonMonotoneValues(SpectrumError):
    pass


class MultiplicitySumMismatch(SpectrumError):
    pass


class MarkedCountOutOfRange(SpectrumError):
    pass


class DimensionTooLarge(ScrambledError, ValueError):
    pass


class DegenerateGround(ScrambledError):
    """Ground level is degenerate, so the gap and V01 are undefined."""


class BracketingFailure(ScrambledError, ArithmeticError):
    pass


class StepSizeUnderflow(ScrambledError, ArithmeticError):
    pass


class ToleranceNotMet(ScrambledError, ArithmeticError):
    pass


class NonPositiveGap(ScrambledError, ValueError):
    pass


class QuadratureFailure(ScrambledError, ArithmeticError):
    pass


class EndpointSingularity(ScrambledError, ValueError):
    pass


class PathIllDefined(ScrambledError, ValueError):
    pass


class DivergentRuntime(ScrambledError, ArithmeticError):
    pass


class PromiseViolation(ScrambledError):
    """Oracle readouts are inconsistent with the constant-or-balanced promise."""


class DegenerateFit(ScrambledError, ValueError):
    pass
