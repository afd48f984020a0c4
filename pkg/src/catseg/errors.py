"""Exception types raised across the package."""


class CatsegError(Exception):
    """Base class for all package errors."""


class ShapeError(CatsegError, ValueError):
    pass


class ContractError(CatsegError, ValueError):
    """A documented precondition was violated by the caller."""


class NumericError(CatsegError, ArithmeticError):
    """An iterative routine failed to converge.

    ``residual`` carries the last measured convergence quantity.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class ParseError(CatsegError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(CatsegError):
    def __init__(self, message: str, usable_pairs: int = 0):
        super().__init__(message)
        self.usable_pairs = usable_pairs


class CorruptionError(CatsegError):
    pass


class MetricError(CatsegError, ValueError):
    pass


class TrainingError(CatsegError):
    pass


class CheckpointError(CatsegError):
    pass
