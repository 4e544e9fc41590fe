"""Exception hierarchy.  Each top-level family maps to a CLI exit code."""


class TileSparseError(Exception):
    exit_code = 1


class ConfigError(TileSparseError, ValueError):
    exit_code = 2


class DataError(TileSparseError):
    exit_code = 3


class ImageReadError(DataError, OSError):
    """File missing or unreadable."""


class UnsupportedFormatError(DataError, ValueError):
    """Not a PGM or grayscale PNG."""


class CorruptHeaderError(DataError, ValueError):
    """Recognised format but a truncated or malformed header/body."""


class DimensionError(TileSparseError, ValueError):
    """Array shapes that do not line up."""


class NumericalError(TileSparseError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericalError):
    """Iterative solver stopped at its iteration cap.

    ``last_iterate`` and ``violation`` carry the state it stopped in.
    """

    def __init__(self, message, last_iterate=None, violation=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.violation = violation
