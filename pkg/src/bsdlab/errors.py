"""Exception hierarchy.

Every error raised by the library derives from ``BSDError`` so callers
(the CLI in particular) can map them to exit codes.
"""


class BSDError(Exception):
    """Base class."""


class InputError(BSDError):
    """Malformed input: wrong shapes, bad parameters, broken configs."""


class PropertyViolation(BSDError):
    """A mathematical property expected of the input does not hold."""


class AmbiguousRank(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class SymmetryViolation(InputError):
    pass


class NotOnBoundary(InputError):
    pass


class NotAnIsometry(InputError):
    pass


class SingularDenominator(InputError):
    pass


class InvalidFlag(InputError):
    pass


class BadDimension(InputError):
    pass


class NotIsotropic(InputError):
    pass


class LevelOrderViolation(InputError):
    pass


class PointNotOnSigma(InputError):
    pass


class TangentNotTangent(InputError):
    pass


class Degenerate(PropertyViolation):
    pass


class FrameDriftTooLarge(PropertyViolation):
    pass


class InvalidParams(InputError):
    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        msg = constraint if not detail else f"{constraint}: {detail}"
        super().__init__(msg)


class NotOnVMRT(InputError):
    pass


class SingularPoint(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class ZeroParameter(InputError):
    pass


class BadSeed(InputError):
    pass


class PointNotOnSlice(InputError):
    pass


class ChartFailure(PropertyViolation):
    pass


class DegenerateJet(PropertyViolation):
    pass


class MonotonicityViolation(PropertyViolation):
    pass


class InconsistentDependence(PropertyViolation):
    pass


class InsufficientSamples(InputError):
    pass


class RegimeViolation(PropertyViolation):
    pass


class OrthogonalityResidual(PropertyViolation):
    pass


class StageError(BSDError):
    """Wraps an error with the report stage it came from."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
