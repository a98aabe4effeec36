"""Exception types shared across the package."""


class RdvsimError(Exception):
    """Base class for all package errors."""


class DomainError(RdvsimError, ValueError):
    """A query fell outside the domain an object was built for."""


class ConfigurationError(RdvsimError, ValueError):
    """An object was constructed with inconsistent or unsupported settings."""


class DataError(RdvsimError, ValueError):
    """Measurement data is malformed (non-finite values, length mismatch)."""


class InputError(RdvsimError, ValueError):
    """A function argument violates its documented precondition."""
