"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class UnreachableError(ValueError):
    """A first-passage target cannot be reached from the start state."""


class ResourceError(RuntimeError):
    """A computation would exceed its configured size budget."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or violates a precondition."""
