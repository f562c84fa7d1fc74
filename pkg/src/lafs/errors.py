"""Exception types shared across the package."""


class LafsError(Exception):
    """Base class for all package errors."""


class ParseError(LafsError):
    """Raw input that cannot be tokenized into a valid record."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EncodeError(LafsError):
    """A record field that cannot be mapped to a numeric value."""


class DimensionError(LafsError):
    """Shape mismatch between arrays, models, or scaling parameters."""


class ConfigError(LafsError):
    """Invalid configuration value."""
