"""
Exception hierarchy for the bottleneck detectors.

Library code raises these; the CLI maps them onto exit statuses
(InputError -> 1, InfeasibleError -> 2).
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.model import ValidationReport


class BottleneckError(Exception):
    """Base class for all application errors."""

    exit_code: int = 1


class InputError(BottleneckError, ValueError):
    """Malformed input, violated invariant or failed precondition."""

    exit_code = 1

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


class ParseError(InputError):
    """A document could not be decoded."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, column: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}:{column if column is not None else 0}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line
        self.column = column


class InfeasibleError(BottleneckError):
    """The request is valid but cannot be computed within configured limits."""

    exit_code = 2


class BudgetExceededError(InfeasibleError):
    """Enumeration space larger than the configured budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"enumeration needs {count} combinations, budget is {budget}")
        self.count = count
        self.budget = budget


class InstanceTooLargeError(InfeasibleError):
    """Exact oracle requested on an instance above its node limit."""

    def __init__(self, size: int, limit: int, what: str = "instance"):
        super().__init__(f"{what} has {size} nodes, exact limit is {limit}")
        self.size = size
        self.limit = limit
