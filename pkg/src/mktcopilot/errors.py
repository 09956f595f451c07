"""Exceptions shared across more than one subsystem."""


class ConfigError(Exception):
    """A parameter or configuration value is outside its documented range."""


class RangeError(Exception):
    """A numeric value is outside the range the caller promised."""
