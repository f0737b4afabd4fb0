"""Exception types.

Every error carries a short machine-readable ``code`` so the CLI and the
reports can name the failing condition without parsing messages.
"""


class LevyLabError(ValueError):
    code = "levylab-error"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details


class InvalidModel(LevyLabError):
    code = "invalid-model"


class QuadratureFailed(LevyLabError):
    code = "symbol-quadrature-failed"


class NoLevyMeasure(LevyLabError):
    code = "no-levy-measure"


class DegenerateProfile(LevyLabError):
    code = "degenerate-profile"


class OutOfRange(LevyLabError):
    code = "out-of-range"


class DivergentMoment(LevyLabError):
    code = "divergent-moment"


class IncomparableMeasures(LevyLabError):
    code = "incomparable-measures"


class GridUnderresolved(LevyLabError):
    code = "grid-underresolved"


class HWViolated(LevyLabError):
    code = "hw-violated"


class NonIntegrable(LevyLabError):
    code = "nonintegrable"


class ShiftTooLarge(LevyLabError):
    code = "shift-too-large"


class InsufficientSpan(LevyLabError):
    code = "insufficient-span"


class RateOverflow(LevyLabError):
    code = "rate-overflow"


class InsufficientSamples(LevyLabError):
    code = "insufficient-samples"


class GridUnderresolvedWarning(UserWarning):
    """The frequency lattice does not fully resolve exp(-t Phi)."""
