"""Command-line interface: info, melt, filter, curvature, bench-paradigms, bench-parallel.

Exit codes: 0 success, 2 usage error, 3 format error (bad or missing files),
4 numeric error, 5 memory cap exceeded. Diagnostics go to standard error as
single lines; CSV and summaries go to standard output.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .errors import (DataError, FormatError, IoError, MemoryCapError, NumericError,
                     ParamError, PartitionError, ShapeError)
from .filters import bilateral_filter, convolve_global, gaussian_curvature, \
    stacked_2d_curvature
from .kernels import (DEFAULT_ADAPTIVE_FLOOR, GaussianParams, SigmaRPolicy,
                      default_spatial_params, gaussian_kernel)
from .melt_engine import DEFAULT_MEMORY_CAP, OperatorSpec, PaddingMode, melt
from .tensor_core import DenseTensor, export_pgm, import_pgm, read_tensor, write_tensor

_PADDING = {"valid": PaddingMode.VALID, "zero": PaddingMode.SAME_ZERO,
            "reflect": PaddingMode.SAME_REFLECT}


def _fail(code: int, message: str) -> int:
    print(f"meltgrid: {message}", file=sys.stderr)
    return code


def _parse_ints(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated integers, got {text!r}")


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated floats, got {text!r}")


def _per_axis(values: list, rank: int, flag: str) -> list:
    if len(values) == 1:
        return values * rank
    if len(values) != rank:
        raise ValueError(f"{flag} needs 1 or {rank} values, got {len(values)}")
    return values


def _load_tensor(path: str) -> DenseTensor:
    with open(path, "rb") as source:
        magic = source.read(4)
        source.seek(0)
        if magic[:2] == b"P5":
            return import_pgm(source)
        return read_tensor(source)


def _store_tensor(t: DenseTensor, path: str) -> None:
    with open(path, "wb") as sink:
        if Path(path).suffix.lower() == ".pgm":
            export_pgm(t, sink)
        else:
            write_tensor(t, sink)


def _operator(args, rank: int) -> OperatorSpec:
    extents = _per_axis(_parse_ints(args.extent, "--extent"), rank, "--extent")
    strides = _per_axis(_parse_ints(args.stride, "--stride"), rank, "--stride")
    return OperatorSpec(extents, strides, _PADDING[args.padding])


def _sigma_r_policy(text: str) -> SigmaRPolicy:
    if text == "adaptive":
        return SigmaRPolicy.adaptive()
    if text.startswith("adaptive:"):
        return SigmaRPolicy.adaptive(float(text.split(":", 1)[1]))
    return SigmaRPolicy.constant(float(text))


def _spatial_params(args, op: OperatorSpec) -> GaussianParams:
    if args.sigma_d is None:
        return default_spatial_params(op.extents)
    try:
        sigmas = _parse_floats(args.sigma_d, "--sigma-d")
    except ValueError:
        matrix = _load_tensor(args.sigma_d)
        if matrix.rank != 2:
            raise ValueError(f"--sigma-d matrix file must be rank 2, got {matrix.rank}")
        return GaussianParams(np.zeros(matrix.shape.dims[0]), matrix.array)
    return GaussianParams.diagonal(_per_axis(sigmas, op.rank, "--sigma-d"))


def cmd_info(args) -> int:
    t = _load_tensor(args.input)
    arr = t.array
    print(f"rank={t.rank} shape={t.shape} count={t.shape.count} "
          f"min={arr.min():.6g} max={arr.max():.6g} mean={arr.mean():.6g}")
    return 0


def cmd_melt(args) -> int:
    t = _load_tensor(args.input)
    matrix = melt(t, _operator(args, t.rank), memory_cap=args.memory_cap)
    print(f"rows={matrix.row_count} cols={matrix.op_ravel_len} "
          f"grid={matrix.grid_shape} padding={matrix.padding.value}")
    return 0


def cmd_filter(args) -> int:
    t = _load_tensor(args.input)
    op = _operator(args, t.rank)
    spatial = _spatial_params(args, op)
    started = time.perf_counter()
    if args.kind == "gaussian":
        result = convolve_global(t, op, gaussian_kernel(op, spatial),
                                 memory_cap=args.memory_cap)
    else:
        result = bilateral_filter(t, op, spatial, _sigma_r_policy(args.sigma_r),
                                  memory_cap=args.memory_cap)
    elapsed = time.perf_counter() - started
    _store_tensor(result, args.output)
    print(f"grid={result.shape} elapsed={elapsed:.6f}s", file=sys.stderr)
    return 0


def cmd_curvature(args) -> int:
    t = _load_tensor(args.input)
    if args.mode == "stacked2d":
        spacing = None if args.spacing is None else \
            _per_axis(_parse_floats(args.spacing, "--spacing"), 2, "--spacing")
        field = stacked_2d_curvature(t, spacing)
    else:
        spacing = None if args.spacing is None else \
            _per_axis(_parse_floats(args.spacing, "--spacing"), t.rank, "--spacing")
        field = gaussian_curvature(t, spacing)
    _store_tensor(field.tensor, args.output)
    print(f"grid={field.tensor.shape}", file=sys.stderr)
    return 0


def _bench_workload(args):
    size = _per_axis(_parse_ints(args.size, "--size"), 3, "--size")
    extent = _per_axis(_parse_ints(args.extent, "--extent"), 3, "--extent")
    return bench.build_workload(size, extent, seed=args.seed,
                                memory_cap=args.memory_cap)


def cmd_bench_paradigms(args) -> int:
    matrix, kernel = _bench_workload(args)
    records, medians = bench.run_paradigm_bench(matrix, kernel,
                                                repetitions=args.repetitions)
    bench.write_records(records, sys.stdout)
    broadcast = medians[bench.MAT_BROADCAST]
    for name in (bench.ELEMENT_WISE, bench.VECTOR_WISE, bench.MAT_BROADCAST):
        print(f"median[{name}]={medians[name]:.0f}ns "
              f"speedup_vs_broadcast={medians[name] / broadcast:.2f}x",
              file=sys.stderr)
    return 0


def cmd_bench_parallel(args) -> int:
    matrix, kernel = _bench_workload(args)
    records, medians = bench.run_parallel_bench(matrix, kernel,
                                                max_workers=args.workers,
                                                repetitions=args.repetitions)
    bench.write_records(records, sys.stdout)
    for workers, median in sorted(medians.items()):
        print(f"median[workers={workers}]={median:.0f}ns", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meltgrid",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, output=False):
        p.add_argument("--input", required=True, help="MELT1 or binary PGM path")
        if output:
            p.add_argument("--output", required=True,
                           help="output path (.pgm writes PGM, else MELT1)")
        p.add_argument("--memory-cap", type=int, default=DEFAULT_MEMORY_CAP,
                       help="melt allocation cap in bytes")

    def add_operator(p):
        p.add_argument("--extent", default="3", help="window extents k[,k...] (odd)")
        p.add_argument("--stride", default="1", help="strides s[,s...]")
        p.add_argument("--padding", choices=sorted(_PADDING), default="reflect")

    p = sub.add_parser("info", help="print rank, shape, and value summary")
    add_common(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("melt", help="dump melt matrix dimensions")
    add_common(p)
    add_operator(p)
    p.set_defaults(func=cmd_melt)

    p = sub.add_parser("filter", help="apply a Gaussian or bilateral filter")
    add_common(p, output=True)
    add_operator(p)
    p.add_argument("--kind", choices=("gaussian", "bilateral"), default="gaussian")
    p.add_argument("--sigma-d", default=None,
                   help="per-axis sigmas f[,f...] or a MELT1 covariance matrix path")
    p.add_argument("--sigma-r", default="adaptive",
                   help=f"FLOAT or adaptive[:FLOOR] (default adaptive, "
                        f"floor {DEFAULT_ADAPTIVE_FLOOR})")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("curvature", help="Gaussian curvature field")
    add_common(p, output=True)
    p.add_argument("--mode", choices=("native", "stacked2d"), default="native")
    p.add_argument("--spacing", default=None, help="grid step per axis f[,f...]")
    p.set_defaults(func=cmd_curvature)

    def add_bench(p):
        p.add_argument("--size", default="64,64,64", help="3-D workload shape")
        p.add_argument("--extent", default="3", help="window extents (odd)")
        p.add_argument("--seed", type=int, default=0, help="workload RNG seed")
        p.add_argument("--repetitions", type=int, default=bench.DEFAULT_REPETITIONS)
        p.add_argument("--memory-cap", type=int, default=DEFAULT_MEMORY_CAP)

    p = sub.add_parser("bench-paradigms",
                       help="time element-wise vs vector-wise vs broadcast")
    add_bench(p)
    p.set_defaults(func=cmd_bench_paradigms)

    p = sub.add_parser("bench-parallel", help="time the row map per worker count")
    add_bench(p)
    p.add_argument("--workers", type=int, default=bench.DEFAULT_MAX_WORKERS,
                   help="time worker counts 1..N")
    p.set_defaults(func=cmd_bench_parallel)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, FormatError, DataError, IoError) as exc:
        return _fail(3, f"format error: {exc}")
    except NumericError as exc:
        return _fail(4, f"numeric error: {exc}")
    except MemoryCapError as exc:
        return _fail(5, f"memory cap exceeded: {exc}")
    except (ShapeError, ParamError, PartitionError, ValueError) as exc:
        return _fail(2, f"usage error: {exc}")


if __name__ == "__main__":
    sys.exit(main())
