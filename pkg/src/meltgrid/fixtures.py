"""Deterministic demo tensors: a square mask, a solid cube, a seeded random field.

Run ``python -m meltgrid.fixtures OUTDIR`` to (re)write the bundled .melt
files used by the CLI demos.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .tensor_core import DenseTensor, write_tensor

SQUARE_SIZE = 64
SQUARE_SIDE = 24
CUBE_SIZE = 13
CUBE_SIDE = 5
RANDOM_SHAPE = (16, 16, 16)
RANDOM_SEED = 0


def square_mask(size: int = SQUARE_SIZE, side: int = SQUARE_SIDE) -> DenseTensor:
    """Binary 2-D mask with a centered filled square."""
    lo = (size - side) // 2
    field = np.zeros((size, size))
    field[lo:lo + side, lo:lo + side] = 1.0
    return DenseTensor(field, copy=False)


def square_corners(size: int = SQUARE_SIZE, side: int = SQUARE_SIDE) -> set[tuple[int, int]]:
    """The four corner cells of the mask's filled square."""
    lo = (size - side) // 2
    hi = lo + side - 1
    return {(lo, lo), (lo, hi), (hi, lo), (hi, hi)}


def cube_field(size: int = CUBE_SIZE, side: int = CUBE_SIDE) -> DenseTensor:
    """Binary 3-D field with a centered solid cube."""
    lo = (size - side) // 2
    field = np.zeros((size, size, size))
    field[lo:lo + side, lo:lo + side, lo:lo + side] = 1.0
    return DenseTensor(field, copy=False)


def cube_corners(size: int = CUBE_SIZE, side: int = CUBE_SIDE) -> set[tuple[int, int, int]]:
    """The eight vertex cells of the solid cube."""
    lo = (size - side) // 2
    hi = lo + side - 1
    return {(x, y, z) for x in (lo, hi) for y in (lo, hi) for z in (lo, hi)}


def seeded_tensor(shape=RANDOM_SHAPE, seed: int = RANDOM_SEED) -> DenseTensor:
    """Uniform [0, 1) random tensor from a fixed-seed generator."""
    rng = np.random.default_rng(seed)
    return DenseTensor(rng.random(tuple(shape)), copy=False)


def write_default_fixtures(outdir: Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, tensor in (("square64.melt", square_mask()),
                         ("cube13.melt", cube_field()),
                         ("rand16.melt", seeded_tensor())):
        path = outdir / name
        with open(path, "wb") as sink:
            write_tensor(tensor, sink)
        written.append(path)
    return written


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    for path in write_default_fixtures(target):
        print(path)
