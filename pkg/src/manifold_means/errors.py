"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (the input is malformed)
and :class:`DegeneracyError` (the input is well formed but the statistical
procedure is undefined on it, e.g. a focal mean or a singular covariance).
The CLI maps them to exit codes 2 and 3.
"""


class ManifoldStatsError(Exception):
    """Base class for every error raised by this package."""


class DataError(ManifoldStatsError, ValueError):
    """Malformed or out-of-domain input data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateTetradError(DataError):
    """Landmarks 1 and 2 coincide, or landmarks 1, 2, 3 are collinear."""


class NotSymmetricError(ManifoldStatsError, ValueError):
    """Matrix fails the symmetry (or Hermitian) precondition."""


class DegeneracyError(ManifoldStatsError, ArithmeticError):
    """A statistical quantity is undefined for this sample."""


class SingularCovarianceError(DegeneracyError):
    """A covariance or Hessian matrix is not (numerically) positive definite."""


class FocalMeanError(DegeneracyError):
    """The ambient mean is a focal point of the embedding."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class CutLocusError(DegeneracyError):
    """A logarithm was requested at (numerically) the cut locus."""


class ConvergenceError(DegeneracyError):
    """An iteration hit its cap without meeting its tolerance."""


class BootstrapDegeneracyError(DegeneracyError):
    """Too many bootstrap replicates were degenerate to calibrate a threshold."""

    def __init__(self, message, degenerate_count=None, B=None):
        super().__init__(message)
        self.degenerate_count = degenerate_count
        self.B = B
