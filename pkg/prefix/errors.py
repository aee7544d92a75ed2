"""
Errors - Exception types shared by every stage of the toolkit
"""

from typing import Optional


class InvalidArgumentError(ValueError):
    """Raised when an operation is called with arguments outside its domain"""


class InvalidNetworkError(ValueError):
    """Raised when an operation needs a valid prefix network and gets an invalid one"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class StructuralError(RuntimeError):
    """Raised for combinational cycles and broken netlist wiring"""

    def __init__(self, message: str, cycle: Optional[list] = None):
        super().__init__(message)
        self.cycle = cycle or []
