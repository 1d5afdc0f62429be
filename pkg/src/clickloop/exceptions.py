"""Error types shared across the package."""


class ClickloopError(Exception):
    """Base class for package errors."""


class ShapeMismatchError(ClickloopError, ValueError):
    """Operands have incompatible spatial dimensions."""


class ConfigError(ClickloopError, ValueError):
    """A configuration value is out of its legal range."""


class InputError(ClickloopError, ValueError):
    """An input violates an operation precondition."""


class OutOfBoundsError(InputError):
    """A pixel coordinate lies outside the image grid."""
