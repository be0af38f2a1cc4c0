class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeFormatError(ValueError):
    """A shape file could not be parsed; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigError(ValueError):
    """Invalid or conflicting run configuration."""


class NumericalFailure(RuntimeError):
    """A numerical procedure failed its own convergence check."""
