from typing import Optional

from qpdnls.utils import to_readable_format

class QpdnlsError(Exception):
    exit_code = 1

class ConfigError(QpdnlsError, ValueError):
    """Invalid or unreadable configuration. `line`/`column` are set for JSON syntax errors."""
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column

class UsageError(QpdnlsError, ValueError):
    exit_code = 2

class EnumerationTooLarge(QpdnlsError):
    exit_code = 3

    def __init__(self, what: str, cardinality: int, budget: int) -> None:
        super().__init__(
            f"enumeration too large: {what} has {cardinality} members "
            f"({to_readable_format(cardinality)}) but the budget is {to_readable_format(budget)}"
        )
        self.what = what
        self.cardinality = cardinality
        self.budget = budget

class SupportOverflowError(QpdnlsError):
    exit_code = 3

    def __init__(self, iterate: int, point: tuple, radius: int) -> None:
        super().__init__(f"Picard iterate {iterate} reaches mode {list(point)} outside the box of radius {radius}")
        self.iterate = iterate
        self.point = point
        self.radius = radius

class QuadratureError(QpdnlsError):
    exit_code = 1
