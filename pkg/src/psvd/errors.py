"""Exception types raised by psvd."""


class PsvdError(Exception):
    """Base class for all psvd errors."""


class ValidationError(PsvdError, ValueError):
    """Input data is malformed (non-finite entries, zero start vector, ...)."""


class ContractError(PsvdError, ValueError):
    """A caller broke a precondition (dimension mismatch, k out of range, ...)."""


class ConvergenceError(PsvdError, RuntimeError):
    """An iterative kernel hit its iteration cap.

    ``best`` holds the last iterate so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MatrixMarketError(PsvdError, ValueError):
    """Malformed Matrix Market file."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path
