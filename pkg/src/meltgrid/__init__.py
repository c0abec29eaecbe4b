"""meltgrid: dense n-dimensional neighborhood computation via melt matrices.

A tensor is melted into a two-dimensional matrix whose rows hold the
neighborhood window of each grid point; kernels, filters, and curvature are
then row-wise (and therefore partitionable) operations on that matrix.
"""

from .errors import (DataError, FormatError, IoError, MeltGridError, MemoryCapError,
                     NumericError, ParamError, PartitionError, ShapeError)
from .filters import (CurvatureField, GradientField, HessianField, bilateral_filter,
                      convolve_global, det_small, gaussian_curvature, gradient_field,
                      hessian_field, stacked_2d_curvature)
from .kernels import (DEFAULT_ADAPTIVE_FLOOR, GaussianParams, KernelVector,
                      SigmaRPolicy, adaptive_sigma_r, bilateral_weights,
                      default_spatial_params, gaussian_gradient, gaussian_kernel,
                      gaussian_pdf)
from .melt_engine import (DEFAULT_MEMORY_CAP, GridMap, MeltMatrix, OperatorSpec,
                          PaddingMode, aggregate, melt, quasi_grid, reduce_rows,
                          window_offsets)
from .partition import (ExecutionReport, PartitionVerdict, RowPartition,
                        parallel_map_rows, partition_rows, validate_partition)
from .tensor_core import (MAX_RANK, DenseTensor, Shape, export_pgm, import_pgm,
                          ravel_index, read_tensor, unravel_index, write_tensor)

__version__ = "0.1.0"

__all__ = [
    "MeltGridError", "ShapeError", "FormatError", "DataError", "IoError",
    "ParamError", "PartitionError", "MemoryCapError", "NumericError",
    "Shape", "DenseTensor", "MAX_RANK", "ravel_index", "unravel_index",
    "read_tensor", "write_tensor", "import_pgm", "export_pgm",
    "PaddingMode", "OperatorSpec", "GridMap", "MeltMatrix", "quasi_grid",
    "melt", "aggregate", "reduce_rows", "window_offsets", "DEFAULT_MEMORY_CAP",
    "GaussianParams", "SigmaRPolicy", "KernelVector", "gaussian_pdf",
    "gaussian_gradient", "gaussian_kernel", "bilateral_weights",
    "adaptive_sigma_r", "default_spatial_params", "DEFAULT_ADAPTIVE_FLOOR",
    "GradientField", "HessianField", "CurvatureField", "convolve_global",
    "bilateral_filter", "gradient_field", "hessian_field", "det_small",
    "gaussian_curvature", "stacked_2d_curvature",
    "RowPartition", "PartitionVerdict", "ExecutionReport", "partition_rows",
    "validate_partition", "parallel_map_rows",
    "__version__",
]
