"""Errors raised by the warehouse LBT simulator."""

from __future__ import annotations

from typing import Any


class WarehouseSimError(Exception):
    """Base error for the simulator."""


class ConfigError(WarehouseSimError):
    """A scenario or parameter file is malformed."""

    def __init__(
        self, message: str, field: str | None = None, line: int | None = None
    ) -> None:
        """Initialize the error.

        Args:
            message: Human readable description
            field: Dotted path of the offending key, if known
            line: 1-based line in the source file, if known
        """
        self.message = message
        self.field = field
        self.line = line
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        """Return the message prefixed with line and field."""
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(f"field '{self.field}'")
        if where:
            return f"{', '.join(where)}: {self.message}"
        return self.message


class SimulationError(WarehouseSimError):
    """A fatal logic error inside a simulation run."""


class EnergyModelError(SimulationError):
    """The energy DFA was driven through an undefined transition."""


class InvariantViolation(SimulationError):
    """An audit of a finished run found a violated invariant."""

    def __init__(self, message: str, item: Any = None) -> None:
        self.item = item
        super().__init__(message)
