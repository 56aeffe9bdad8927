"""Exception hierarchy shared by every package of the library."""


class LdpError(ValueError):
    """Base class for all library errors."""


class InvalidArgumentError(LdpError):
    pass


class DomainError(LdpError):
    """An argument lies on or outside the effective domain of a log-MGF."""


class OutOfRangeError(LdpError):
    """A coefficient index or window leaves the materialized range [-A, A]."""


class RegimeError(LdpError):
    """An operation was asked of the wrong coefficient regime."""


class ScenarioError(LdpError):
    pass


class PartitionError(LdpError):
    pass


class OracleUnavailableError(LdpError):
    pass


class TiltInfeasibleError(LdpError):
    pass


class ConfigurationError(LdpError):
    """Malformed or inconsistent job configuration."""
