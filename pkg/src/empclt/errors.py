"""Exception types shared across the toolkit.

Everything derives from EmpcltError so callers can catch broadly; the CLI
maps ConfigError to exit 1, CheckFailure to exit 2 and ResourceError to
exit 3.
"""


class EmpcltError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(EmpcltError, ValueError):
    """A scalar parameter is outside its admissible range."""


class ShapeError(EmpcltError, ValueError):
    """An array argument has the wrong shape or length."""


class SizeError(EmpcltError, ValueError):
    """A size/count argument is inconsistent (n too small, reps < 2, ...)."""


class CornerError(EmpcltError, ValueError):
    """Bump corners violate the strict componentwise order a < b."""


class DomainError(EmpcltError, ValueError):
    """A point lies outside the domain covered by a partition or grid."""


class SingularityError(EmpcltError, ValueError):
    """The modulus inverse degenerates (jump CDF), no control value exists."""


class MomentError(EmpcltError, ValueError):
    """A required moment of the innovation law is not finite."""


class ContractError(EmpcltError, ValueError):
    """A documented precondition was violated (e.g. f not centered)."""


class ResourceError(EmpcltError, RuntimeError):
    """Exact enumeration would exceed the configured state budget."""


class ConfigError(EmpcltError, ValueError):
    """Scenario configuration failed to parse or validate."""


class CheckFailure(EmpcltError, RuntimeError):
    """At least one in-scenario acceptance check failed (CLI exit 2)."""
