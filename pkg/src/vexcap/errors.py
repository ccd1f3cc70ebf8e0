"""Exception types shared across the package."""


class VexcapError(Exception):
    """Base class for all package-specific errors."""


class DomainError(VexcapError, ValueError):
    """An operation was called with mathematically inadmissible inputs."""


class ConfigError(VexcapError, ValueError):
    """A scenario configuration is malformed or out of range."""
