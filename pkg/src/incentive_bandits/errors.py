"""Exception types shared across the package."""


class BanditError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(BanditError, ValueError):
    pass


class InvalidState(BanditError, RuntimeError):
    pass


class BudgetExceeded(BanditError):
    """Raised when a grid or an enumeration would grow past its configured cap."""

    def __init__(self, message: str, size: int):
        super().__init__(message)
        self.size = size


class DiagnosticUndefined(BanditError, ValueError):
    pass
