"""Exception types shared across the package."""


class EncodingError(ValueError):
    """A parameter vector violates the zero-encoding of absent defects."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class DegenerateUpdateError(RuntimeError):
    """Every particle (or grid node) received zero posterior weight."""
