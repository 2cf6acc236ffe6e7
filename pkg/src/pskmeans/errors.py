"""Exception types raised by the library."""


class PSKMeansError(Exception):
    """Base class for all library errors."""


class InvalidDomainError(PSKMeansError, ValueError):
    pass


class InvalidCountError(PSKMeansError, ValueError):
    pass


class PointOutsideDomainError(PSKMeansError, ValueError):
    pass


class OrderTooLargeError(PSKMeansError, ValueError):
    pass


class InsufficientDataError(PSKMeansError, ValueError):
    pass


class SingularSystemError(PSKMeansError, ArithmeticError):
    pass


class DegenerateRoughnessError(PSKMeansError, ArithmeticError):
    """Roughness is exactly zero at some lambda, so its log is undefined."""


class LengthMismatchError(PSKMeansError, ValueError):
    pass


class ZeroVarianceError(PSKMeansError, ArithmeticError):
    pass


class InvalidKError(PSKMeansError, ValueError):
    pass


class EmptyInputError(PSKMeansError, ValueError):
    pass


class InvalidClassError(PSKMeansError, ValueError):
    pass


class ConfigError(PSKMeansError, ValueError):
    pass


class FormatError(PSKMeansError, ValueError):
    """A file does not follow the expected table layout."""

    def __init__(self, message, row=None, col=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if col is not None:
            where.append(f"col {col}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.col = col
