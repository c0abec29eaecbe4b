"""Exception hierarchy shared by every meltgrid module."""

from __future__ import annotations


class MeltGridError(Exception):
    """Base class for all meltgrid errors."""


class ShapeError(MeltGridError):
    """Rank or extent mismatch between tensors, operators, or fields."""


class FormatError(MeltGridError):
    """Malformed or truncated byte stream (MELT1 or PGM)."""


class DataError(MeltGridError):
    """Non-finite or otherwise invalid values at ingestion."""


class IoError(MeltGridError):
    """Underlying read/write failure while serializing."""


class ParamError(MeltGridError):
    """Invalid numeric parameters (non-SPD covariance, non-positive sigma)."""


class PartitionError(MeltGridError):
    """Invalid row-partition request (zero workers, more blocks than rows)."""


class MemoryCapError(MeltGridError):
    """Melt allocation would exceed the configured memory cap."""


class NumericError(MeltGridError):
    """A computation produced a non-finite value.

    Carries the grid position (and/or melt row) where the value appeared so
    callers can report the offending element.
    """

    def __init__(self, message: str, *, row: int | None = None,
                 grid_index: tuple[int, ...] | None = None):
        if grid_index is not None:
            message = f"{message} (grid index {grid_index})"
        elif row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
        self.row = row
        self.grid_index = grid_index
