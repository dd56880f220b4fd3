"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to a stable process status:

    2  malformed input (format)
    3  data coverage (gaps, missing CPI months, nothing left after excision)
    4  invalid parameters
    5  numerical degeneracy
    6  I/O (missing or unreadable files)
"""


class StockCyclesError(Exception):
    exit_code = 1


class FormatError(StockCyclesError, ValueError):
    """Unparseable input. ``row`` is the 1-based data row when known."""

    exit_code = 2

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class CoverageError(StockCyclesError, ValueError):
    exit_code = 3


class GapError(CoverageError):
    pass


class EmptySeriesError(CoverageError):
    pass


class ParamError(StockCyclesError, ValueError):
    exit_code = 4


class UnknownCountryError(ParamError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class TooShortError(ParamError):
    pass


class NumericalError(StockCyclesError, ArithmeticError):
    exit_code = 5


class DegenerateError(NumericalError):
    """Zero variance or an otherwise singular input."""


class DegenerateBaseError(DegenerateError):
    pass


class RankError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass


class DivisionByNearZeroError(NumericalError, ZeroDivisionError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class InputIOError(StockCyclesError, OSError):
    exit_code = 6
