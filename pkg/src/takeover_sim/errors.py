"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A value violates its declared bounds or is not finite."""


class TraceParseError(ValueError):
    """An expert trace file could not be parsed."""


class ConfigError(ValueError):
    """A scenario or experiment configuration is unusable."""
