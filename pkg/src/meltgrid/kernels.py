"""Multivariate Gaussian evaluation and spatial/bilateral weight generation.

Weights are produced in melt-matrix column order (row-major window offsets)
and normalized to sum to one. The bilateral range term uses a sigma policy
that is either a constant or adapts per row to the neighborhood's sample
standard deviation (floored to stay positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamError, ShapeError
from .melt_engine import OperatorSpec, window_offsets
from .tensor_core import Shape

DEFAULT_ADAPTIVE_FLOOR = 1e-6

_SYMMETRY_TOL = 1e-12


class GaussianParams:
    """Mean and SPD covariance of a k-variate Gaussian, with cached inverse.

    The covariance must be symmetric within 1e-12 (relative to its largest
    entry) and positive definite; definiteness is verified by a Cholesky
    factorization at construction so evaluation never fails.
    """

    __slots__ = ("_mean", "_cov", "_inv", "_det")

    def __init__(self, mean, covariance):
        mean = np.array(mean, dtype=np.float64).reshape(-1)
        cov = np.array(covariance, dtype=np.float64)
        k = mean.shape[0]
        if cov.shape != (k, k):
            raise ParamError(f"covariance shape {cov.shape} does not match dimension {k}")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if float(np.max(np.abs(cov - cov.T))) > _SYMMETRY_TOL * scale:
            raise ParamError("covariance is not symmetric within 1e-12")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ParamError("covariance is not positive definite") from exc
        self._mean = mean
        self._cov = cov
        self._inv = np.linalg.inv(cov)
        self._det = float(np.prod(np.diagonal(chol)) ** 2)
        for arr in (self._mean, self._cov, self._inv):
            arr.flags.writeable = False

    @classmethod
    def diagonal(cls, sigmas, mean=None) -> "GaussianParams":
        """Zero-mean (unless given) Gaussian with diag(sigma_i^2) covariance."""
        sigmas = np.asarray(sigmas, dtype=np.float64).reshape(-1)
        if np.any(sigmas <= 0):
            raise ParamError(f"sigmas must be positive, got {sigmas}")
        if mean is None:
            mean = np.zeros_like(sigmas)
        return cls(mean, np.diag(sigmas ** 2))

    @property
    def dim(self) -> int:
        return self._mean.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def covariance(self) -> np.ndarray:
        return self._cov

    @property
    def inv_covariance(self) -> np.ndarray:
        return self._inv

    @property
    def det_covariance(self) -> float:
        return self._det


def default_spatial_params(extents: Shape) -> GaussianParams:
    """Default spatial covariance diag(((k_i - 1)/4)^2): the window spans 2 sigma.

    Axes of extent 1 contribute only the zero offset, so their sigma is
    irrelevant; 1.0 is substituted to keep the covariance positive definite.
    """
    sigmas = [1.0 if k == 1 else (k - 1) / 4.0 for k in extents.dims]
    return GaussianParams.diagonal(sigmas)


def gaussian_pdf(x, p: GaussianParams) -> float:
    """Multivariate normal density at x; degenerates to the univariate form at k=1."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != p.dim:
        raise ShapeError(f"point dimension {x.shape[0]} != parameter dimension {p.dim}")
    delta = x - p.mean
    quad = float(delta @ p.inv_covariance @ delta)
    norm = (2.0 * math.pi) ** (p.dim / 2.0) * math.sqrt(p.det_covariance)
    return math.exp(-0.5 * quad) / norm


def gaussian_gradient(x, p: GaussianParams) -> np.ndarray:
    """Gradient of the density at x: -inv(Sigma) (x - mu) times the density."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != p.dim:
        raise ShapeError(f"point dimension {x.shape[0]} != parameter dimension {p.dim}")
    delta = x - p.mean
    return -(p.inv_covariance @ delta) * gaussian_pdf(x, p)


@dataclass(frozen=True)
class KernelVector:
    """Weights aligned with melt-matrix column order."""

    weights: np.ndarray
    normalized: bool

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class SigmaRPolicy:
    """Range-term sigma: CONSTANT(value) or ADAPTIVE(floor).

    ADAPTIVE resolves to the row's unbiased sample standard deviation,
    floored so an all-equal neighborhood never divides by zero.
    """

    kind: str
    value: float

    @classmethod
    def constant(cls, value: float) -> "SigmaRPolicy":
        if value <= 0:
            raise ParamError(f"constant sigma_r must be positive, got {value}")
        return cls("constant", float(value))

    @classmethod
    def adaptive(cls, floor: float = DEFAULT_ADAPTIVE_FLOOR) -> "SigmaRPolicy":
        if floor <= 0:
            raise ParamError(f"adaptive floor must be positive, got {floor}")
        return cls("adaptive", float(floor))

    def sigma_for(self, row: np.ndarray) -> float:
        if self.kind == "constant":
            return self.value
        return adaptive_sigma_r(row, self.value)

    def sigmas_for(self, rows: np.ndarray) -> np.ndarray:
        """Vector of per-row sigmas for an R x C block of melt rows."""
        if self.kind == "constant":
            return np.full(rows.shape[0], self.value)
        if rows.shape[1] < 2:
            return np.full(rows.shape[0], self.value)
        return np.maximum(self.value, np.std(rows, axis=1, ddof=1))


def adaptive_sigma_r(row: np.ndarray, floor: float) -> float:
    """max(floor, unbiased sample stddev of the row); floor for single-element rows."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape[0] < 2:
        return floor
    return max(floor, float(np.std(row, ddof=1)))


def _spatial_log_weights(offsets: np.ndarray, spatial: GaussianParams) -> np.ndarray:
    """-1/2 (o - mu)^T inv(Sigma) (o - mu) for each window offset o.

    Shared by gaussian_kernel and bilateral_weights so the bilateral weights
    degenerate to the Gaussian kernel bit-for-bit when the range term
    vanishes.
    """
    delta = offsets.astype(np.float64) - spatial.mean
    quad = np.einsum("ci,ij,cj->c", delta, spatial.inv_covariance, delta)
    return -0.5 * quad


def _normalized(weights: np.ndarray) -> np.ndarray:
    return weights / weights.sum()


def _require_centered(spatial: GaussianParams) -> None:
    if np.any(spatial.mean != 0):
        raise ParamError("spatial Gaussian must have zero mean")


def gaussian_kernel(op: OperatorSpec, spatial: GaussianParams) -> KernelVector:
    """Normalized spatial Gaussian weights over the operator window.

    Weights are proportional to the zero-mean density at each window offset
    (the normalization constant cancels); the center weight is the maximum.
    """
    if spatial.dim != op.rank:
        raise ShapeError(f"spatial dimension {spatial.dim} != operator rank {op.rank}")
    _require_centered(spatial)
    log_w = _spatial_log_weights(window_offsets(op.extents), spatial)
    return KernelVector(_normalized(np.exp(log_w)), normalized=True)


def bilateral_weights(row: np.ndarray, offsets: np.ndarray,
                      spatial: GaussianParams, policy: SigmaRPolicy) -> KernelVector:
    """Normalized bilateral weights for one melt row.

    Combines the spatial Gaussian exponent with the range exponent
    -(row[c] - row[center])^2 / (2 sigma_r^2); for an all-equal row the range
    exponent is exactly zero and the result equals gaussian_kernel.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.shape[0] != offsets.shape[0]:
        raise ShapeError(f"row length {row.shape[0]} != offset count {offsets.shape[0]}")
    if spatial.dim != offsets.shape[1]:
        raise ShapeError(f"spatial dimension {spatial.dim} != offset rank {offsets.shape[1]}")
    _require_centered(spatial)
    center = (row.shape[0] - 1) // 2
    sigma_r = policy.sigma_for(row)
    log_w = _spatial_log_weights(offsets, spatial)
    log_w = log_w - (row - row[center]) ** 2 / (2.0 * sigma_r ** 2)
    return KernelVector(_normalized(np.exp(log_w)), normalized=True)
