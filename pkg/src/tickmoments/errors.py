"""Exception hierarchy shared by every module."""


class TickMomentsError(Exception):
    """Base class for all package errors."""


class DomainError(TickMomentsError, ValueError):
    """Input outside the mathematical domain of an estimator."""


class ConfigError(TickMomentsError, ValueError):
    """Invalid configuration or option value."""


class OrderingError(TickMomentsError, ValueError):
    """Events arrived out of time order."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(TickMomentsError, ValueError):
    """A malformed row in an event file."""

    def __init__(self, line, column, reason):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column!r}: {reason}")


class MissingPastPrice(TickMomentsError, LookupError):
    """No trade exists at or before the requested past time."""

    def __init__(self, time):
        self.time = time
        super().__init__(f"no trade at or before t={time!r}")


class InsufficientInventory(TickMomentsError, ValueError):
    """A sale exceeds the investor's remaining lot volume."""

    def __init__(self, investor_id, requested, available):
        self.investor_id = investor_id
        self.requested = requested
        self.available = available
        self.shortfall = requested - available
        super().__init__(
            f"investor {investor_id!r} sells {requested!r} but holds {available!r} "
            f"(shortfall {self.shortfall!r})"
        )
