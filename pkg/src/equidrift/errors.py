"""Exception types shared across the toolkit.

Every error raised by library code derives from :class:`EquidriftError` so
callers (and the CLI) can map failures to error classes without string
matching.
"""


class EquidriftError(Exception):
    """Base class for all equidrift errors."""


# -- matrix / factorization -------------------------------------------------

class NotPositiveDefinite(EquidriftError):
    """A covariance matrix is not (numerically) positive-definite."""


class SingularMatrix(EquidriftError):
    """A matrix required to be invertible is singular or near-singular."""


class DimensionMismatch(EquidriftError):
    """Operands have incompatible dimensions."""


# -- strategy ----------------------------------------------------------------

class DegenerateExposure(EquidriftError):
    """No finite scaling of the optimal direction reaches the requested exposure."""


# -- simulation --------------------------------------------------------------

class NonPositiveGridPoint(EquidriftError):
    """A wealth-density grid contains a non-positive level."""


# -- data --------------------------------------------------------------------

class ParseError(EquidriftError):
    """A returns file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NonMonotonicDates(EquidriftError):
    """Panel dates are not strictly increasing."""


class EmptyPanel(EquidriftError):
    """An operation produced or received a panel with no rows."""


class MissingData(EquidriftError):
    """A masked value was encountered where a real observation is required."""

    def __init__(self, message: str, date: int | None = None, asset: str | None = None):
        super().__init__(message)
        self.date = date
        self.asset = asset


# -- backtest ----------------------------------------------------------------

class InsufficientHistory(EquidriftError):
    """The panel is too short for the configured window and cadence."""


class InsufficientObservations(EquidriftError):
    """Too few complete rows to estimate a covariance matrix."""


class SingularCovariance(EquidriftError):
    """An estimation window produced a covariance matrix that cannot be factored."""


# -- statistics ---------------------------------------------------------------

class ZeroVariance(EquidriftError):
    """A return series has (numerically) zero variance; Sharpe ratio undefined."""


class TooFewObservations(EquidriftError):
    """A statistic needs more observations than the series provides."""


class LengthMismatch(EquidriftError):
    """Paired return series have different lengths."""
