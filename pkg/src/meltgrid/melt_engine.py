"""Quasi-grid arithmetic, the melt gather, and aggregation of row results.

``melt`` turns a rank-m tensor into a two-dimensional melt matrix whose row r
holds the raveled neighborhood window around grid point r. Rows are mutually
independent, so any row-wise computation on the matrix can be partitioned and
evaluated in any order (see :mod:`meltgrid.partition`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product as _cartesian
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import MemoryCapError, NumericError, ShapeError
from .tensor_core import DenseTensor, Shape, unravel_index

DEFAULT_MEMORY_CAP = 4 * 1024 ** 3


class PaddingMode(Enum):
    """Boundary handling for neighborhood windows.

    VALID shrinks the grid so no synthesized value is ever read. SAME_ZERO and
    SAME_REFLECT keep the grid aligned with the input and synthesize
    out-of-bounds reads as zero or as a mirror without repeating the edge
    element. SAME_* requires window extent <= 2*input extent - 1 per axis so
    the mirror is well defined.
    """

    VALID = "valid"
    SAME_ZERO = "zero"
    SAME_REFLECT = "reflect"


@dataclass(frozen=True)
class OperatorSpec:
    """Neighborhood operator: odd per-axis window extents, strides, padding."""

    extents: Shape
    strides: tuple[int, ...]
    padding: PaddingMode

    def __init__(self, extents, strides: Sequence[int] | None = None,
                 padding: PaddingMode = PaddingMode.SAME_REFLECT):
        extents = extents if isinstance(extents, Shape) else Shape(extents)
        if any(k % 2 == 0 for k in extents.dims):
            raise ShapeError(f"operator extents must all be odd, got {extents.dims}")
        strides = tuple(int(s) for s in (strides if strides is not None
                                         else (1,) * extents.rank))
        if len(strides) != extents.rank:
            raise ShapeError(f"{len(strides)} strides for rank {extents.rank}")
        if any(s < 1 for s in strides):
            raise ShapeError(f"strides must be positive, got {strides}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "strides", strides)
        object.__setattr__(self, "padding", padding)

    @property
    def rank(self) -> int:
        return self.extents.rank

    @property
    def half_extents(self) -> tuple[int, ...]:
        return tuple((k - 1) // 2 for k in self.extents.dims)


@dataclass(frozen=True)
class GridMap:
    """Output grid of an operator pass plus the affine grid-to-source map.

    ``origin_of`` returns the source coordinate of the window center for a
    grid index: ``grid_index * strides + base_offset`` per axis.
    """

    grid_shape: Shape
    strides: tuple[int, ...]
    base_offset: tuple[int, ...]

    def origin_of(self, grid_index: Sequence[int]) -> tuple[int, ...]:
        return tuple(g * s + b for g, s, b in
                     zip(grid_index, self.strides, self.base_offset))


def window_offsets(extents: Shape) -> np.ndarray:
    """Relative multi-indices of a window, row-major; center row is all-zero."""
    ranges = [range(-(k - 1) // 2, (k - 1) // 2 + 1) for k in extents.dims]
    return np.array(list(_cartesian(*ranges)), dtype=np.int64)


@dataclass(frozen=True)
class MeltMatrix:
    """R x C matrix of gathered neighborhoods plus grid metadata.

    R is the element count of ``grid_shape`` and C the element count of the
    operator extents; ``rows[r, c]`` holds the source value (or padding) at
    ``grid.origin_of(unravel(r)) + offsets[c]``. ``rows`` and ``offsets`` are
    read-only; the matrix never changes once built.
    """

    rows: np.ndarray
    grid_shape: Shape
    offsets: np.ndarray
    source_shape: Shape
    padding: PaddingMode
    op: OperatorSpec
    grid: GridMap

    @property
    def row_count(self) -> int:
        return self.rows.shape[0]

    @property
    def op_ravel_len(self) -> int:
        return self.rows.shape[1]

    @property
    def center(self) -> int:
        return (self.op_ravel_len - 1) // 2


def quasi_grid(input_shape: Shape, op: OperatorSpec) -> GridMap:
    """Grid shape and origin map produced by moving ``op`` over a tensor.

    VALID grids shrink to floor((extent - window)/stride) + 1 per axis with the
    window center as base offset; SAME_* grids sample the input's own
    structure (extent floor((d-1)/stride) + 1, identity at unit stride).
    """
    if op.rank != input_shape.rank:
        raise ShapeError(f"operator rank {op.rank} != tensor rank {input_shape.rank}")
    dims, halves = input_shape.dims, op.half_extents
    if op.padding is PaddingMode.VALID:
        if any(k > d for k, d in zip(op.extents.dims, dims)):
            raise ShapeError(f"VALID window {op.extents.dims} larger than input {dims}")
        grid = tuple((d - k) // s + 1 for d, k, s in zip(dims, op.extents.dims, op.strides))
        base = halves
    else:
        if any(k > 2 * d - 1 for k, d in zip(op.extents.dims, dims)):
            raise ShapeError(
                f"SAME window {op.extents.dims} needs extent <= 2*input-1, input {dims}")
        grid = tuple((d - 1) // s + 1 for d, s in zip(dims, op.strides))
        base = (0,) * len(dims)
    return GridMap(Shape(grid), op.strides, base)


def melt(t: DenseTensor, op: OperatorSpec,
         memory_cap: int = DEFAULT_MEMORY_CAP) -> MeltMatrix:
    """Gather every operator window of ``t`` into one row-decoupled matrix.

    Rows are ordered by row-major grid index, columns by row-major window
    index; padding values are materialized so all rows have fixed width C.
    Raises MemoryCapError before allocating more than ``memory_cap`` bytes
    for the row storage.
    """
    grid = quasi_grid(t.shape, op)
    n_rows, n_cols = grid.grid_shape.count, op.extents.count
    needed = n_rows * n_cols * 8
    if needed > memory_cap:
        raise MemoryCapError(
            f"melt needs {needed} bytes for {n_rows}x{n_cols} rows, cap {memory_cap}")

    if op.padding is PaddingMode.VALID:
        source = t.array
    else:
        pad = [(h, h) for h in op.half_extents]
        mode = "constant" if op.padding is PaddingMode.SAME_ZERO else "reflect"
        source = np.pad(t.array, pad, mode=mode)

    windows = sliding_window_view(source, op.extents.dims)
    windows = windows[tuple(slice(None, None, s) for s in op.strides)]
    assert windows.shape[:t.rank] == grid.grid_shape.dims
    rows = np.ascontiguousarray(windows.reshape(n_rows, n_cols), dtype=np.float64)
    rows.flags.writeable = False
    offsets = window_offsets(op.extents)
    offsets.flags.writeable = False
    return MeltMatrix(rows=rows, grid_shape=grid.grid_shape, offsets=offsets,
                      source_shape=t.shape, padding=op.padding, op=op, grid=grid)


def aggregate(m: MeltMatrix, row_results: Sequence[float]) -> DenseTensor:
    """Reshape one scalar per melt row back into a grid tensor."""
    results = np.asarray(row_results, dtype=np.float64)
    if results.shape != (m.row_count,):
        raise ShapeError(
            f"got {results.shape} row results for {m.row_count} grid elements")
    return DenseTensor(results.reshape(m.grid_shape.dims))


def reduce_rows(m: MeltMatrix, reducer: Callable[[np.ndarray], float]) -> DenseTensor:
    """Apply a pure row function to every melt row and aggregate the results.

    The reducer must depend only on its row; rows may be evaluated in any
    order or concurrently without changing the output.
    """
    results = np.empty(m.row_count, dtype=np.float64)
    for r in range(m.row_count):
        value = float(reducer(m.rows[r]))
        if not math.isfinite(value):
            raise NumericError("row reducer produced a non-finite value",
                               row=r, grid_index=unravel_index(r, m.grid_shape))
        results[r] = value
    return aggregate(m, results)
