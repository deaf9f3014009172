"""Exception hierarchy shared by every module."""


class DueError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(DueError, ValueError):
    pass


class ValidationError(DueError, ValueError):
    """A document or scenario violates a structural or domain constraint."""


class ParseError(ValidationError):
    """Malformed input text; ``location`` points at the offending spot."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class InvariantViolationError(DueError, ValueError):
    pass


class DivergenceError(DueError, RuntimeError):
    """Network loading produced arrivals beyond the allowed horizon."""


class NumericFailureError(DueError, ArithmeticError):
    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")
