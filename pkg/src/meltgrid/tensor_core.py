"""Dense n-dimensional float64 tensor container with row-major indexing and bit-exact I/O.

The native byte format (``MELT1``) is fixed little-endian:

* 4 magic bytes ``MELT``
* version byte ``0x01``
* rank byte (1..8)
* two reserved zero bytes
* ``rank`` unsigned 64-bit extents
* ``prod(extents)`` IEEE-754 float64 payload values, row-major (last axis fastest)

PGM support is restricted to binary ``P5`` with ``maxval <= 65535``; imported
samples are scaled into ``[0, 1]`` by division with ``maxval``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import DataError, FormatError, IoError, ShapeError

MAX_RANK = 8

_MAGIC = b"MELT"
_VERSION = 1
_HEADER = struct.Struct("<4sBB2s")
_READ_CHUNK = 1 << 24

MultiIndex = Sequence[int]


@dataclass(frozen=True)
class Shape:
    """Per-axis extents of a dense tensor; rank 1..8, every extent >= 1."""

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        object.__setattr__(self, "dims", tuple(int(d) for d in dims))
        if not 1 <= len(self.dims) <= MAX_RANK:
            raise ShapeError(f"rank must be 1..{MAX_RANK}, got {len(self.dims)}")
        if any(d < 1 for d in self.dims):
            raise ShapeError(f"every extent must be >= 1, got {self.dims}")
        if self.count >= 1 << 64:
            raise ShapeError("element count overflows 64-bit unsigned range")

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def count(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    def __iter__(self):
        return iter(self.dims)

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)


class DenseTensor:
    """Immutable rank-m tensor of finite float64 values in row-major order.

    ``copy=False`` adopts the given array without copying (it must already be
    float64 and C-contiguous) and freezes it in place; callers passing
    ``copy=False`` hand over ownership.
    """

    __slots__ = ("_array",)

    def __init__(self, array, copy: bool = True):
        arr = np.array(array, dtype=np.float64, order="C", copy=copy)
        Shape(arr.shape)  # validates rank and extents
        if not np.all(np.isfinite(arr)):
            raise DataError("tensor values must be finite (no NaN/Inf)")
        arr.flags.writeable = False
        self._array = arr

    @property
    def shape(self) -> Shape:
        return Shape(self._array.shape)

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def array(self) -> np.ndarray:
        """Read-only n-dimensional view of the values."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Read-only raveled (row-major) view of the values."""
        return self._array.reshape(-1)

    def __getitem__(self, idx):
        return self._array[idx]

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


def ravel_index(idx: MultiIndex, shape: Shape) -> int:
    """Row-major linear offset of a multi-index; bijective with unravel_index."""
    if len(idx) != shape.rank:
        raise IndexError(f"index rank {len(idx)} != shape rank {shape.rank}")
    offset = 0
    for coord, extent in zip(idx, shape.dims):
        coord = int(coord)
        if not 0 <= coord < extent:
            raise IndexError(f"coordinate {coord} out of bounds for extent {extent}")
        offset = offset * extent + coord
    return offset


def unravel_index(offset: int, shape: Shape) -> tuple[int, ...]:
    """Inverse of ravel_index."""
    offset = int(offset)
    if not 0 <= offset < shape.count:
        raise IndexError(f"offset {offset} out of bounds for {shape.count} elements")
    coords = []
    for extent in reversed(shape.dims):
        offset, c = divmod(offset, extent)
        coords.append(c)
    return tuple(reversed(coords))


def _read_exact(source: BinaryIO, n: int) -> bytes:
    """Read exactly n bytes in bounded chunks; short reads are format errors."""
    parts = []
    remaining = n
    while remaining > 0:
        chunk = source.read(min(remaining, _READ_CHUNK))
        if not chunk:
            raise FormatError(f"truncated stream: expected {n} more payload bytes")
        parts.append(chunk)
        remaining -= len(chunk)
    return b"".join(parts)


def write_tensor(t: DenseTensor, sink: BinaryIO) -> None:
    """Emit the MELT1 encoding of a tensor (bit-exact round trip with read_tensor)."""
    dims = t.shape.dims
    header = _HEADER.pack(_MAGIC, _VERSION, len(dims), b"\x00\x00")
    extents = struct.pack(f"<{len(dims)}Q", *dims)
    payload = t.array.astype("<f8", copy=False).tobytes()
    try:
        sink.write(header)
        sink.write(extents)
        sink.write(payload)
    except OSError as exc:
        raise IoError(f"failed writing tensor: {exc}") from exc


def read_tensor(source: BinaryIO) -> DenseTensor:
    """Parse a MELT1 stream back into a DenseTensor."""
    raw = source.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise FormatError("truncated stream: incomplete header")
    magic, version, rank, reserved = _HEADER.unpack(raw)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if not 1 <= rank <= MAX_RANK:
        raise FormatError(f"rank byte must be 1..{MAX_RANK}, got {rank}")
    if reserved != b"\x00\x00":
        raise FormatError("reserved header bytes must be zero")
    dims = struct.unpack(f"<{rank}Q", _read_exact(source, 8 * rank))
    try:
        shape = Shape(dims)
    except ShapeError as exc:
        raise FormatError(f"invalid extents {dims}: {exc}") from exc
    values = np.frombuffer(_read_exact(source, 8 * shape.count), dtype="<f8")
    if not np.all(np.isfinite(values)):
        raise DataError("payload contains non-finite values")
    return DenseTensor(values.reshape(shape.dims))


def _next_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comment lines."""
    n = len(data)
    while pos < n:
        b = data[pos]
        if b in b" \t\r\n\v\f":
            pos += 1
        elif b == ord("#"):
            while pos < n and data[pos] != ord("\n"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in b" \t\r\n\v\f":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return data[start:pos], pos


def import_pgm(source: BinaryIO) -> DenseTensor:
    """Read a binary P5 PGM into a rank-2 tensor scaled to [0, 1]."""
    data = source.read()
    token, pos = _next_pgm_token(data, 0)
    if token != b"P5":
        raise FormatError(f"unsupported PGM flavor {token!r}, only binary P5")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_pgm_token(data, pos)
        try:
            value = int(token)
        except ValueError as exc:
            raise FormatError(f"non-integer PGM {name}: {token!r}") from exc
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"invalid PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise FormatError(f"PGM maxval must be 1..65535, got {maxval}")
    pos += 1  # single whitespace byte separating header from raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = data[pos:pos + width * height * dtype.itemsize]
    if len(raster) < width * height * dtype.itemsize:
        raise FormatError("truncated PGM raster")
    samples = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    return DenseTensor((samples / maxval).reshape(height, width))


def export_pgm(t: DenseTensor, sink: BinaryIO, maxval: int = 255) -> None:
    """Write a rank-2 tensor as binary P5, clamping to [0, 1] before quantization."""
    if t.rank != 2:
        raise ShapeError(f"PGM export requires rank 2, got rank {t.rank}")
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must be 1..65535, got {maxval}")
    height, width = t.shape.dims
    quantized = np.rint(np.clip(t.array, 0.0, 1.0) * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    try:
        sink.write(b"P5\n%d %d\n%d\n" % (width, height, maxval))
        sink.write(quantized.astype(dtype).tobytes())
    except OSError as exc:
        raise IoError(f"failed writing PGM: {exc}") from exc
