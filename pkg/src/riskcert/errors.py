"""Exception hierarchy shared by every module.

The CLI maps :class:`DataError` and :class:`DomainError` to exit code 1 and
:class:`UsageError` to exit code 2.
"""


class RiskCertError(Exception):
    """Base class for all package errors."""


class DomainError(RiskCertError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class DataError(RiskCertError, ValueError):
    """Input data (records, statistics, files) is malformed or inconsistent."""


class SchemaError(DataError):
    """A prediction log violates its declared header or record schema."""


class UsageError(RiskCertError, ValueError):
    """An operation was invoked with an incompatible configuration."""
