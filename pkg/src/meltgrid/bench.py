"""Benchmark harness: kernel application paradigms and worker scaling.

The workload is one Gaussian kernel applied to the melt matrix of a seeded
random 3-D tensor. Three implementations of the same arithmetic are timed:
scalar iteration (ELEMENT_WISE), a per-row dot-product loop (VECTOR_WISE),
and a single matrix broadcast (MAT_BROADCAST). Every bench asserts numerical
agreement across implementations before a single timing row is emitted.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from typing import Callable, IO, Sequence

import numpy as np

from .errors import NumericError
from .kernels import KernelVector, default_spatial_params, gaussian_kernel
from .melt_engine import DEFAULT_MEMORY_CAP, MeltMatrix, OperatorSpec, PaddingMode, melt
from .partition import parallel_map_rows
from .tensor_core import DenseTensor

ELEMENT_WISE = "ELEMENT_WISE"
VECTOR_WISE = "VECTOR_WISE"
MAT_BROADCAST = "MAT_BROADCAST"
PARALLEL = "PARALLEL"

CSV_FIELDS = ("paradigm", "workers", "repetition", "nanos")

DEFAULT_SIZE = (64, 64, 64)
DEFAULT_EXTENT = (3, 3, 3)
DEFAULT_REPETITIONS = 20
DEFAULT_MAX_WORKERS = 4

PARADIGM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BenchRecord:
    paradigm: str
    workers: int
    repetition: int
    nanos: int


def build_workload(size: Sequence[int] = DEFAULT_SIZE,
                   extent: Sequence[int] = DEFAULT_EXTENT, seed: int = 0,
                   memory_cap: int = DEFAULT_MEMORY_CAP) -> tuple[MeltMatrix, KernelVector]:
    """Seeded random tensor melted with a mirrored window, plus its Gaussian kernel."""
    rng = np.random.default_rng(seed)
    tensor = DenseTensor(rng.random(tuple(size)), copy=False)
    op = OperatorSpec(tuple(extent), padding=PaddingMode.SAME_REFLECT)
    matrix = melt(tensor, op, memory_cap=memory_cap)
    kernel = gaussian_kernel(op, default_spatial_params(op.extents))
    return matrix, kernel


def element_wise_apply(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Scalar iteration over every row element; the oracle paradigm."""
    rows_list = rows.tolist()
    weights_list = weights.tolist()
    out = np.empty(len(rows_list))
    for r, row in enumerate(rows_list):
        acc = 0.0
        for value, weight in zip(row, weights_list):
            acc += value * weight
        out[r] = acc
    return out


def vector_wise_apply(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """One dot product per row, iterated in Python."""
    out = np.empty(rows.shape[0])
    for r in range(rows.shape[0]):
        out[r] = np.dot(rows[r], weights)
    return out


def mat_broadcast_apply(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """The whole kernel application as a single matrix-vector product."""
    return rows @ weights


_PARADIGM_IMPLS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    ELEMENT_WISE: element_wise_apply,
    VECTOR_WISE: vector_wise_apply,
    MAT_BROADCAST: mat_broadcast_apply,
}


def _timed(fn: Callable[[], np.ndarray]) -> int:
    t0 = time.perf_counter_ns()
    fn()
    return time.perf_counter_ns() - t0


def run_paradigm_bench(matrix: MeltMatrix, kernel: KernelVector,
                       repetitions: int = DEFAULT_REPETITIONS,
                       impls: dict[str, Callable] | None = None,
                       ) -> tuple[list[BenchRecord], dict[str, float]]:
    """Time the three paradigms; refuse to time at all if their results disagree.

    Returns the records plus median nanos per paradigm. Raises NumericError
    (before any record is produced) when any implementation deviates from the
    element-wise result by more than 1e-12.
    """
    impls = dict(_PARADIGM_IMPLS) if impls is None else impls
    rows, weights = matrix.rows, kernel.weights

    reference = impls[ELEMENT_WISE](rows, weights)
    for name in (VECTOR_WISE, MAT_BROADCAST):
        deviation = float(np.max(np.abs(impls[name](rows, weights) - reference)))
        if not deviation <= PARADIGM_TOLERANCE:
            raise NumericError(
                f"{name} deviates from {ELEMENT_WISE} by {deviation:.3e}; "
                f"refusing to emit timings")

    records: list[BenchRecord] = []
    for rep in range(repetitions):
        for name in (ELEMENT_WISE, VECTOR_WISE, MAT_BROADCAST):
            nanos = _timed(lambda impl=impls[name]: impl(rows, weights))
            records.append(BenchRecord(name, workers=1, repetition=rep, nanos=nanos))

    medians = {name: float(statistics.median(r.nanos for r in records
                                             if r.paradigm == name))
               for name in (ELEMENT_WISE, VECTOR_WISE, MAT_BROADCAST)}
    return records, medians


def run_parallel_bench(matrix: MeltMatrix, kernel: KernelVector,
                       max_workers: int = DEFAULT_MAX_WORKERS,
                       repetitions: int = DEFAULT_REPETITIONS,
                       ) -> tuple[list[BenchRecord], dict[int, float]]:
    """Time the row map for workers 1..max_workers, net of pool setup.

    Outputs for every worker count are compared bitwise against the
    single-worker run before timing; a mismatch raises NumericError and no
    records are produced.
    """
    weights = kernel.weights

    def rowfn(row: np.ndarray) -> float:
        return np.dot(row, weights)

    baseline, _ = parallel_map_rows(matrix, rowfn, workers=1)
    for workers in range(2, max_workers + 1):
        result, _ = parallel_map_rows(matrix, rowfn, workers=workers)
        if not np.array_equal(baseline, result):
            raise NumericError(
                f"worker count {workers} changed the output; refusing to emit timings")

    records: list[BenchRecord] = []
    for rep in range(repetitions):
        for workers in range(1, max_workers + 1):
            _, report = parallel_map_rows(matrix, rowfn, workers=workers)
            records.append(BenchRecord(PARALLEL, workers=workers, repetition=rep,
                                       nanos=report.total_nanos))

    medians = {workers: float(statistics.median(
        r.nanos for r in records if r.workers == workers))
        for workers in range(1, max_workers + 1)}
    return records, medians


def write_records(records: Sequence[BenchRecord], stream: IO[str]) -> None:
    """Emit records as machine-stable CSV: fixed header, integer nanoseconds."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for record in records:
        writer.writerow([record.paradigm, record.workers, record.repetition,
                         record.nanos])
