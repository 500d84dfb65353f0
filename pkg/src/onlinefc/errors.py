"""Exception types shared across the package.

The CLI maps each class to a fixed exit code.
"""


class ForecastError(Exception):
    exit_code = 1


class ConfigError(ForecastError, ValueError):
    """Malformed model configuration or command-line usage."""

    exit_code = 2


class DataError(ForecastError, ValueError):
    """Input data that cannot be ingested or aligned."""

    exit_code = 3


class ParseError(ConfigError):
    """Syntax error in a transformation expression."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ParameterDomainError(ConfigError):
    """Transformation or regression parameter outside its valid domain."""


class NumericError(ForecastError, ArithmeticError):
    """Non-finite intermediate during estimation."""

    exit_code = 4

    def __init__(self, message: str, horizon: int | None = None, step: int | None = None):
        where = []
        if horizon is not None:
            where.append(f"horizon k{horizon}")
        if step is not None:
            where.append(f"step {step}")
        super().__init__(message + (f" ({', '.join(where)})" if where else ""))
        self.horizon = horizon
        self.step = step


class StateVersionError(ForecastError):
    """Serialized state written with an incompatible schema version."""

    exit_code = 5
