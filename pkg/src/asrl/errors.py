"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DataError(DomainError):
    """A dataset file is missing, malformed, or fails registry validation."""


class InvariantError(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""
