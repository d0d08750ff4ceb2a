"""Exception types shared across the package."""


class PoussinError(Exception):
    """Base class for all package errors."""


class DomainError(PoussinError, ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class RangeError(PoussinError, ValueError):
    """A query or target lies outside the supported range."""


class ResourceError(PoussinError, RuntimeError):
    """A request would exceed the configured memory or computation cap."""


class CacheError(PoussinError, ValueError):
    """A cached theta table is corrupt or does not match its header."""


class NotExtendable(PoussinError):
    """The bound fails immediately below x0, so no smaller threshold exists.

    ``x_star`` carries the threshold that still holds (``ceil(x0)``).
    """

    def __init__(self, x_star, outcome=None):
        super().__init__(f"bound cannot be extended below x0; x_star = {x_star}")
        self.x_star = x_star
        self.outcome = outcome


class InconclusiveError(PoussinError):
    """A verification driver hit a comparison it could not decide."""

    def __init__(self, outcome):
        super().__init__(f"inconclusive near x = {outcome.witness_x!r}: {outcome.reason}")
        self.outcome = outcome
