"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
2 usage, 3 parse, 4 invariant, 5 runtime.
"""


class StereoError(Exception):
    exit_code = 5


class UsageError(StereoError):
    exit_code = 2


class ParseError(StereoError):
    exit_code = 3

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(StereoError, ValueError):
    exit_code = 4


class InvalidDisparityField(InvariantViolation):
    pass


# geometry / estimation failures
class NonPositiveDepth(StereoError, ValueError):
    pass


class NonPositiveDisparity(StereoError, ValueError):
    pass


class DegenerateTranslation(StereoError, ValueError):
    pass


class DegenerateBaseline(StereoError, ValueError):
    pass


class DegenerateConfiguration(StereoError, ValueError):
    pass


class InsufficientPoints(StereoError, ValueError):
    pass


class ZeroPlaneOffset(StereoError, ValueError):
    pass


class PointAtInfinity(StereoError, ValueError):
    pass


# image / volume failures
class OutOfBounds(StereoError, IndexError):
    pass


class SizeMismatch(StereoError, ValueError):
    pass


class ImageSizeMismatch(SizeMismatch):
    pass


class VolumeTooLarge(StereoError, MemoryError):
    pass


class DisparityOverflow(StereoError, ValueError):
    pass


class EmptyEvaluationSet(StereoError, ValueError):
    pass


class NonPositiveTime(StereoError, ValueError):
    pass
