"""Balanced row partitioning of melt matrices and a deterministic parallel executor.

A valid partition satisfies three conditions: (1) every block is nonempty and
the block sizes sum to the row count, (2) blocks are pairwise disjoint, and
(3) the blocks cover [0, n) so an invertible reassembly exists. Contiguous
blocks in order make that reassembly the identity permutation.

``parallel_map_rows`` shares the melt matrix read-only across workers; each
worker writes only its own output range and a fork-join barrier precedes the
return, so the result is bitwise identical for any worker count.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericError, PartitionError
from .melt_engine import MeltMatrix


@dataclass(frozen=True)
class RowPartition:
    """Ordered half-open row ranges [start, end) covering [0, total_rows)."""

    total_rows: int
    blocks: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class PartitionVerdict:
    """Validation outcome: ok, or the numbers of the violated conditions."""

    ok: bool
    violations: tuple[int, ...]


@dataclass(frozen=True)
class ExecutionReport:
    """Timing of one parallel map: per-block compute and net wall time.

    ``total_nanos`` covers only the compute phase (after partitioning and
    worker-pool warm-up), so pool setup cost is already deducted.
    """

    workers: int
    per_block_nanos: tuple[int, ...]
    total_nanos: int
    rows_processed: int


def partition_rows(n: int, s: int) -> RowPartition:
    """Split [0, n) into s balanced contiguous blocks, larger blocks first."""
    n, s = int(n), int(s)
    if n < 1:
        raise PartitionError(f"row count must be positive, got {n}")
    if not 1 <= s <= n:
        raise PartitionError(f"block count must satisfy 1 <= s <= {n}, got {s}")
    base, extra = divmod(n, s)
    blocks = []
    start = 0
    for i in range(s):
        size = base + (1 if i < extra else 0)
        blocks.append((start, start + size))
        start += size
    return RowPartition(total_rows=n, blocks=tuple(blocks))


def validate_partition(p: RowPartition) -> PartitionVerdict:
    """Check the three partition conditions; returns a verdict, never raises."""
    violations = set()
    sizes = [end - start for start, end in p.blocks]
    if not p.blocks or any(k <= 0 for k in sizes) or sum(sizes) != p.total_rows:
        violations.add(1)
    ordered = sorted((b for b in p.blocks if b[1] > b[0]), key=lambda b: b[0])
    for (_, prev_end), (start, _) in zip(ordered, ordered[1:]):
        if start < prev_end:
            violations.add(2)
    covered = 0
    for start, end in ordered:
        if start < 0 or end > p.total_rows or start > covered:
            violations.add(3)
        covered = max(covered, end)
    if covered != p.total_rows:
        violations.add(3)
    return PartitionVerdict(ok=not violations, violations=tuple(sorted(violations)))


def parallel_map_rows(m: MeltMatrix, rowfn: Callable[[np.ndarray], float],
                      workers: int) -> tuple[np.ndarray, ExecutionReport]:
    """Evaluate a pure row function over every melt row on ``workers`` blocks.

    The result is assembled by absolute row index, so it is independent of the
    block schedule: result[r] == rowfn(rows[r]) for every r, bitwise, for any
    worker count. Raises NumericError (with the row index) if the function
    returns a non-finite value.
    """
    n_rows = m.row_count
    part = partition_rows(n_rows, workers)
    out = np.empty(n_rows, dtype=np.float64)
    per_block = [0] * workers
    rows = m.rows

    def run_block(block_index: int, start: int, end: int) -> None:
        t0 = time.perf_counter_ns()
        for r in range(start, end):
            value = float(rowfn(rows[r]))
            if not math.isfinite(value):
                raise NumericError("row function produced a non-finite value", row=r)
            out[r] = value
        per_block[block_index] = time.perf_counter_ns() - t0

    with ThreadPoolExecutor(max_workers=workers) as pool:
        # Force all worker threads to exist before timing starts, mirroring
        # the practice of deducting pool initialization from benchmark time.
        barrier = threading.Barrier(workers)
        for warmup in [pool.submit(barrier.wait) for _ in range(workers)]:
            warmup.result(timeout=60.0)
        t_start = time.perf_counter_ns()
        futures = [pool.submit(run_block, i, start, end)
                   for i, (start, end) in enumerate(part.blocks)]
        for future in futures:
            future.result()
        total = time.perf_counter_ns() - t_start

    report = ExecutionReport(workers=workers, per_block_nanos=tuple(per_block),
                             total_nanos=total, rows_processed=n_rows)
    return out, report
