"""Exception hierarchy.  ``exit_code`` is what the command line returns."""


class QHoloError(Exception):
    exit_code = 1


class ConfigurationError(QHoloError, ValueError):
    exit_code = 2


class DataError(QHoloError, ValueError):
    exit_code = 3


class ParseError(DataError):
    """Malformed file content; ``offset`` is the byte offset of the bad record."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BoundsError(DataError, IndexError):
    pass


class DetectionError(QHoloError):
    exit_code = 4


class UndefinedStatisticError(QHoloError):
    exit_code = 4


class InsufficientFringeError(UndefinedStatisticError):
    pass


class FitError(QHoloError):
    """Raised when the fringe fit does not converge.

    ``result`` holds the best parameters found so far.
    """

    exit_code = 4

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
