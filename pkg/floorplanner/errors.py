"""
Exception hierarchy for the floorplanner.

Solver non-convergence is reported through result flags, never raised.
"""
from typing import Optional


class FloorplanError(Exception):
    """Base class for all floorplanner errors."""


class ConfigError(FloorplanError, ValueError):
    """Invalid solver configuration."""


class InstanceParseError(FloorplanError, ValueError):
    """Instance document could not be turned into a valid Instance."""

    kind = "parse"

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(f"{location}{message} [{self.kind}]")


class InstanceSyntaxError(InstanceParseError):
    kind = "syntax"


class DuplicateIdError(InstanceParseError):
    kind = "duplicate-id"


class DanglingReferenceError(InstanceParseError):
    kind = "dangling-reference"


class ModuleExceedsDieError(InstanceParseError):
    kind = "module-exceeds-die"


class DegenerateNetError(InstanceParseError):
    kind = "degenerate-net"


class InvalidValueError(InstanceParseError):
    kind = "invalid-value"


class ResultParseError(FloorplanError, ValueError):
    """Result document is malformed or does not match its instance."""


class UnknownPinError(FloorplanError, LookupError):
    """Pin index outside the instance's pin list."""


class EmptyCellError(FloorplanError):
    """Projection requested onto a constraint cell with no points."""


class InfeasiblePairError(FloorplanError):
    """Two modules cannot coexist inside the die in any relative direction."""


class InfeasibleRegionError(FloorplanError):
    """The linear inequality system handed to the QP oracle has no solution."""
