"""Dimension-generic operators composed from melt rows and kernel weights.

Derivative operators read a 3^m mirrored window per grid point: first-order
partials as central differences, second-order partials as the standard
three-point and four-corner stencils. Mirrored boundaries make the input
locally even at the border, so first derivatives vanish there; this is a
known boundary artifact, not a defect.

Gaussian curvature divides det(Hessian) by (1 + sum of squared first
partials)^2, so the denominator never drops below one and the field stays
finite for finite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParamError, ShapeError
from .kernels import GaussianParams, KernelVector, SigmaRPolicy, _require_centered, \
    _spatial_log_weights
from .melt_engine import DEFAULT_MEMORY_CAP, MeltMatrix, OperatorSpec, PaddingMode, \
    aggregate, melt
from .tensor_core import DenseTensor, Shape, unravel_index


@dataclass(frozen=True)
class GradientField:
    """First-order partials per grid point: values[r, i] = dI/dx_i."""

    grid_shape: Shape
    values: np.ndarray
    spacing: tuple[float, ...]


@dataclass(frozen=True)
class HessianField:
    """Second-order partials per grid point: values[r, i, j] = d^2 I/(dx_i dx_j)."""

    grid_shape: Shape
    values: np.ndarray
    spacing: tuple[float, ...]


@dataclass(frozen=True)
class CurvatureField:
    """Gaussian curvature per grid point."""

    tensor: DenseTensor


def _weighted_row_sum(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Single reduction path for all kernel applications: identical weight
    # matrices always produce identical outputs, whichever operator built them.
    return np.einsum("rc,rc->r", rows, weights)


def _check_finite(values: np.ndarray, grid_shape: Shape, what: str) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        r = int(np.flatnonzero(~finite)[0])
        raise NumericError(f"{what} produced a non-finite value",
                           row=r, grid_index=unravel_index(r, grid_shape))


def convolve_global(t: DenseTensor, op: OperatorSpec, kernel: KernelVector,
                    memory_cap: int = DEFAULT_MEMORY_CAP) -> DenseTensor:
    """Apply one fixed kernel vector across all melt rows (a single broadcast)."""
    if len(kernel) != op.extents.count:
        raise ShapeError(
            f"kernel length {len(kernel)} != window size {op.extents.count}")
    m = melt(t, op, memory_cap=memory_cap)
    weights = np.tile(kernel.weights, (m.row_count, 1))
    out = _weighted_row_sum(m.rows, weights)
    _check_finite(out, m.grid_shape, "convolution")
    return aggregate(m, out)


def bilateral_filter(t: DenseTensor, op: OperatorSpec, spatial: GaussianParams,
                     policy: SigmaRPolicy,
                     memory_cap: int = DEFAULT_MEMORY_CAP) -> DenseTensor:
    """Edge-preserving smoothing with per-row spatial-plus-range weights.

    Every melt row gets its own normalized weight vector, so the output is the
    ratio-of-sums form of the classical filter; with an enormous constant
    sigma_r the range term is negligible and the result approaches the plain
    Gaussian filter.
    """
    if spatial.dim != t.rank:
        raise ShapeError(f"spatial dimension {spatial.dim} != tensor rank {t.rank}")
    _require_centered(spatial)
    m = melt(t, op, memory_cap=memory_cap)
    rows = m.rows
    sigmas = policy.sigmas_for(rows)
    log_w = _spatial_log_weights(m.offsets, spatial)[np.newaxis, :] \
        - (rows - rows[:, m.center, np.newaxis]) ** 2 / (2.0 * sigmas ** 2)[:, np.newaxis]
    weights = np.exp(log_w)
    weights /= weights.sum(axis=1, keepdims=True)
    out = _weighted_row_sum(rows, weights)
    _check_finite(out, m.grid_shape, "bilateral filter")
    return aggregate(m, out)


def _derivative_melt(t: DenseTensor, spacing) -> tuple[MeltMatrix, np.ndarray]:
    if any(d < 3 for d in t.shape.dims):
        raise ShapeError(f"derivative stencils need every extent >= 3, got {t.shape.dims}")
    spacing = np.ones(t.rank) if spacing is None else \
        np.asarray(spacing, dtype=np.float64).reshape(-1)
    if spacing.shape[0] != t.rank:
        raise ShapeError(f"{spacing.shape[0]} spacing values for rank {t.rank}")
    if np.any(spacing <= 0):
        raise ParamError(f"spacing must be positive, got {spacing}")
    op = OperatorSpec((3,) * t.rank, padding=PaddingMode.SAME_REFLECT)
    return melt(t, op), spacing


def _axis_strides(rank: int) -> list[int]:
    # column distance of a unit step along each axis inside the 3^m window
    return [3 ** (rank - 1 - i) for i in range(rank)]


def _gradient_values(rows: np.ndarray, rank: int, spacing: np.ndarray) -> np.ndarray:
    center = (rows.shape[1] - 1) // 2
    strides = _axis_strides(rank)
    values = np.empty((rows.shape[0], rank))
    for i in range(rank):
        values[:, i] = (rows[:, center + strides[i]] - rows[:, center - strides[i]]) \
            / (2.0 * spacing[i])
    return values


def _hessian_values(rows: np.ndarray, rank: int, spacing: np.ndarray) -> np.ndarray:
    center = (rows.shape[1] - 1) // 2
    strides = _axis_strides(rank)
    values = np.empty((rows.shape[0], rank, rank))
    for i in range(rank):
        si = strides[i]
        values[:, i, i] = (rows[:, center + si] - 2.0 * rows[:, center]
                           + rows[:, center - si]) / spacing[i] ** 2
        for j in range(i + 1, rank):
            sj = strides[j]
            mixed = (rows[:, center + si + sj] - rows[:, center + si - sj]
                     - rows[:, center - si + sj] + rows[:, center - si - sj]) \
                / (4.0 * spacing[i] * spacing[j])
            values[:, i, j] = mixed
            values[:, j, i] = mixed
    return values


def gradient_field(t: DenseTensor, spacing=None) -> GradientField:
    """Central-difference first partials on the mirrored 3^m window."""
    m, spacing = _derivative_melt(t, spacing)
    values = _gradient_values(m.rows, t.rank, spacing)
    return GradientField(m.grid_shape, values, tuple(spacing))


def hessian_field(t: DenseTensor, spacing=None) -> HessianField:
    """Second partials per grid point; only i <= j is computed, then mirrored."""
    m, spacing = _derivative_melt(t, spacing)
    values = _hessian_values(m.rows, t.rank, spacing)
    return HessianField(m.grid_shape, values, tuple(spacing))


def det_small(mat) -> float:
    """Determinant of a small (m <= 8) square matrix by partially pivoted elimination."""
    a = np.array(mat, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"determinant needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if n > 8:
        raise ShapeError(f"determinant supports order <= 8, got {n}")
    sign = 1.0
    det = 1.0
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot, col] == 0.0:
            return 0.0
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            sign = -sign
        det *= a[col, col]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
    return sign * det


def gaussian_curvature(t: DenseTensor, spacing=None) -> CurvatureField:
    """det(Hessian) / (1 + squared gradient magnitude)^2 per grid point.

    One melt pass feeds both derivative fields, so the whole pipeline touches
    only the rank-2 melt matrix, the rank-2 gradient block, and the rank-3
    Hessian block regardless of the input's rank.
    """
    m, spacing = _derivative_melt(t, spacing)
    grad = _gradient_values(m.rows, t.rank, spacing)
    hess = _hessian_values(m.rows, t.rank, spacing)
    denom = (1.0 + (grad ** 2).sum(axis=1)) ** 2
    curvature = np.empty(m.row_count)
    for r in range(m.row_count):
        curvature[r] = det_small(hess[r]) / denom[r]
    _check_finite(curvature, m.grid_shape, "curvature")
    return CurvatureField(aggregate(m, curvature))


def stacked_2d_curvature(t: DenseTensor, spacing=None) -> CurvatureField:
    """Planar curvature applied slice-by-slice along the last axis of a rank-3 tensor.

    This is the dimension-blind baseline: it responds to in-plane corners on
    every slice and cannot distinguish the body of a solid from its vertices.
    """
    if t.rank != 3:
        raise ShapeError(f"stacked 2-D curvature needs rank 3, got rank {t.rank}")
    spacing = (1.0, 1.0) if spacing is None else tuple(float(s) for s in spacing)
    if len(spacing) != 2:
        raise ShapeError(f"stacked 2-D curvature takes 2 spacing values, got {len(spacing)}")
    slices = []
    for z in range(t.shape.dims[2]):
        plane = DenseTensor(t.array[:, :, z])
        slices.append(gaussian_curvature(plane, spacing).tensor.array)
    return CurvatureField(DenseTensor(np.stack(slices, axis=2)))
