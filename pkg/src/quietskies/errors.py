"""Exceptions shared across more than one module."""


class ParseError(Exception):
    """A file could not be parsed as the documented format."""


class ValidationError(Exception):
    """A parsed object violates an invariant; message names the offending field."""


class ConfigError(Exception):
    """A configuration value is inconsistent or out of its allowed domain."""


class OutOfRange(ValueError):
    """An input lies outside a model's stated validity window."""
