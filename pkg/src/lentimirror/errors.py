"""Exception hierarchy shared by all lentimirror modules."""


class LentimirrorError(Exception):
    """Base class for all package errors."""


class DegenerateGeometry(LentimirrorError):
    """A sight line cannot be intersected with the screen plane.

    Carries the offending point index when raised from a batch operation.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotOnScreenPlane(LentimirrorError):
    """A point expected to lie on the z=0 screen plane does not."""


class InvalidSpec(LentimirrorError):
    """Grating hardware parameters violate their physical constraints."""


class InvalidViewing(LentimirrorError):
    """Viewing configuration is unusable (viewer at or inside the focal plane)."""


class DimensionMismatch(LentimirrorError):
    """Frame buffers with incompatible dimensions were combined."""


class TotalInternalReflection(LentimirrorError):
    """A traced ray cannot refract into the next medium."""


class NoIntersection(LentimirrorError):
    """A traced ray does not reach the requested lenslet."""


class ParallelRays(LentimirrorError):
    """Two sight rays are parallel and define no perceived point."""


class InvalidDepth(LentimirrorError):
    """Depth sample is zero or negative."""


class ParseError(LentimirrorError):
    """A trace/scene/config file failed to parse.

    ``line`` is the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantViolation(LentimirrorError):
    """A loaded or constructed value violates a documented invariant."""


class UnsupportedFormat(LentimirrorError):
    """An image file is not binary PPM (P6, maxval 255)."""
