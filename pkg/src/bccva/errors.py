"""Exception types shared across the engine and the command line."""


class ConfigError(ValueError):
    """Invalid input: names the offending field and the violated constraint."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(ArithmeticError):
    """Numerical failure such as a correlation matrix that is not PSD."""
