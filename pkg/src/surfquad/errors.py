"""Exception hierarchy shared by the control, analysis and simulation modules."""


class SurfquadError(Exception):
    """Base class for all package errors."""


class AsymmetryError(SurfquadError, ValueError):
    """Matrix handed to ``vee`` is too far from skew-symmetric."""


class SingularError(SurfquadError, ValueError):
    """Matrix cannot be projected onto SO(3)."""


class AntipodalError(SurfquadError, ValueError):
    """Second error set evaluated at (or numerically at) an antipodal attitude."""


class GainError(SurfquadError, ValueError):
    """Controller gains violate a required inequality."""


class DegenerateThrustError(SurfquadError, ArithmeticError):
    """Desired thrust vector has (numerically) zero length."""


class ParallelHeadingError(SurfquadError, ValueError):
    """Heading direction is parallel to the desired thrust axis."""


class ThetaTooLargeError(SurfquadError, ValueError):
    """Attitude-error bound exceeds the admissible maximum."""


class NotPositiveDefiniteError(SurfquadError, ValueError):
    """Matrix expected to be positive definite is not."""


class IllConditionedError(SurfquadError, ArithmeticError):
    """Polynomial boundary-value solve lost accuracy."""


class RangeError(SurfquadError, ValueError):
    """Requested time lies outside the recorded telemetry."""


class GridMismatchError(SurfquadError, ValueError):
    """Two telemetries do not share the same time grid."""


class ConfigError(SurfquadError, ValueError):
    """Run configuration is malformed."""
