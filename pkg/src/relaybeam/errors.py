"""Exception types raised by relaybeam."""


class RelayBeamError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(RelayBeamError, ValueError):
    pass


class NoConvergence(RelayBeamError, RuntimeError):
    pass


class NumericalFailure(RelayBeamError, RuntimeError):
    pass


class EmptyInterval(RelayBeamError, ValueError):
    """The bisection oracle rejected the lower end of the search interval."""


class ZeroMatrix(RelayBeamError, ValueError):
    pass


class DomainError(RelayBeamError, ValueError):
    pass


class ConfigError(RelayBeamError, ValueError):
    pass
