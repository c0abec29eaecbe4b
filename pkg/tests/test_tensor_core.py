"""Tensor container, ravel arithmetic, and bit-exact file round trips."""

import io
import struct

import numpy as np
import pytest

from meltgrid import (DataError, DenseTensor, FormatError, IoError, Shape, ShapeError,
                      export_pgm, import_pgm, ravel_index, read_tensor, unravel_index,
                      write_tensor)


class TestShape:
    def test_basic_properties(self):
        s = Shape((3, 4))
        assert s.rank == 2
        assert s.count == 12
        assert str(s) == "3x4"

    @pytest.mark.parametrize("dims", [(), (0,), (3, 0, 2), (1,) * 9])
    def test_invalid_dims_rejected(self, dims):
        with pytest.raises(ShapeError):
            Shape(dims)

    def test_u64_overflow_rejected(self):
        with pytest.raises(ShapeError):
            Shape((2 ** 32, 2 ** 32, 2))


class TestRavel:
    def test_documented_offsets(self):
        s = Shape((3, 4))
        assert ravel_index((1, 2), s) == 6
        assert ravel_index((0, 0, 0), Shape((5, 5, 5))) == 0
        assert ravel_index((2, 3), s) == 11

    def test_documented_inverses(self):
        assert unravel_index(6, Shape((3, 4))) == (1, 2)
        assert unravel_index(0, Shape((5, 5, 5))) == (0, 0, 0)
        assert unravel_index(11, Shape((3, 4))) == (2, 3)

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            ravel_index((3, 0), Shape((3, 4)))
        with pytest.raises(IndexError):
            ravel_index((0,), Shape((3, 4)))
        with pytest.raises(IndexError):
            unravel_index(12, Shape((3, 4)))
        with pytest.raises(IndexError):
            unravel_index(-1, Shape((3, 4)))

    def test_bijection_random_shapes(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            rank = int(rng.integers(1, 6))
            shape = Shape(tuple(int(d) for d in rng.integers(1, 8, size=rank)))
            for offset in range(shape.count):
                idx = unravel_index(offset, shape)
                assert ravel_index(idx, shape) == offset

    def test_row_major_law_last_axis_is_fastest(self):
        shape = Shape((4, 3, 5))
        for offset in range(shape.count - 1):
            idx = unravel_index(offset, shape)
            if idx[-1] + 1 < 5:
                bumped = idx[:-1] + (idx[-1] + 1,)
                assert ravel_index(bumped, shape) == offset + 1


class TestDenseTensor:
    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            DenseTensor([1.0, np.nan])
        with pytest.raises(DataError):
            DenseTensor([[np.inf]])

    def test_immutable_and_decoupled_from_source(self):
        src = np.ones((2, 2))
        t = DenseTensor(src)
        src[0, 0] = 5.0
        assert t.array[0, 0] == 1.0
        with pytest.raises(ValueError):
            t.array[0, 0] = 2.0

    def test_data_is_row_major_flat_view(self):
        t = DenseTensor([[1.0, 2.0], [3.0, 4.0]])
        assert t.data.tolist() == [1.0, 2.0, 3.0, 4.0]


class TestMeltFormat:
    @pytest.mark.parametrize("shape", [(7,), (3, 5), (2, 3, 4)])
    def test_round_trip_bit_identical(self, shape):
        rng = np.random.default_rng(sum(shape))
        t = DenseTensor(rng.standard_normal(shape))
        buf = io.BytesIO()
        write_tensor(t, buf)
        buf.seek(0)
        back = read_tensor(buf)
        assert back.shape.dims == shape
        assert back.array.tobytes() == t.array.tobytes()

    def test_layout_is_header_then_extents_then_values(self):
        payload = struct.pack("<4sBB2s", b"MELT", 1, 2, b"\x00\x00")
        payload += struct.pack("<2Q", 2, 2)
        payload += struct.pack("<4d", 1.0, 2.0, 3.0, 4.0)
        t = read_tensor(io.BytesIO(payload))
        assert t.array.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(b"XXXX" + b"\x01\x01\x00\x00" + b"\x00" * 16))

    def test_bad_version_and_rank(self):
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(struct.pack("<4sBB2s", b"MELT", 2, 1, b"\x00\x00")))
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(struct.pack("<4sBB2s", b"MELT", 1, 9, b"\x00\x00")))
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(struct.pack("<4sBB2s", b"MELT", 1, 1, b"\x00\x01")))

    def test_truncated_payload(self):
        buf = io.BytesIO()
        write_tensor(DenseTensor([1.0, 2.0, 3.0]), buf)
        clipped = io.BytesIO(buf.getvalue()[:-4])
        with pytest.raises(FormatError):
            read_tensor(clipped)

    def test_non_finite_payload(self):
        raw = struct.pack("<4sBB2s", b"MELT", 1, 1, b"\x00\x00")
        raw += struct.pack("<Q", 1) + struct.pack("<d", float("nan"))
        with pytest.raises(DataError):
            read_tensor(io.BytesIO(raw))

    def test_write_failure_wrapped(self):
        class Broken:
            def write(self, _):
                raise OSError("disk gone")

        with pytest.raises(IoError):
            write_tensor(DenseTensor([1.0]), Broken())


class TestPgm:
    def test_documented_scaling(self):
        raw = b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64])
        t = import_pgm(io.BytesIO(raw))
        assert t.shape.dims == (2, 2)
        np.testing.assert_allclose(
            t.array, [[0.0, 1.0], [128 / 255, 64 / 255]], rtol=0, atol=0)

    def test_maxval_zero_rejected(self):
        with pytest.raises(FormatError):
            import_pgm(io.BytesIO(b"P5\n1 1\n0\n\x00"))

    @pytest.mark.parametrize("magic", [b"P2", b"P3", b"P6"])
    def test_other_flavors_rejected(self, magic):
        with pytest.raises(FormatError):
            import_pgm(io.BytesIO(magic + b"\n1 1\n255\n\x00"))

    def test_header_comments_skipped(self):
        raw = b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([10, 20])
        t = import_pgm(io.BytesIO(raw))
        np.testing.assert_allclose(t.array, [[10 / 255, 20 / 255]])

    def test_truncated_raster(self):
        with pytest.raises(FormatError):
            import_pgm(io.BytesIO(b"P5\n2 2\n255\n" + bytes([1, 2, 3])))

    def test_sixteen_bit_round_trip(self):
        rng = np.random.default_rng(3)
        t = DenseTensor(rng.random((4, 6)))
        buf = io.BytesIO()
        export_pgm(t, buf, maxval=65535)
        buf.seek(0)
        back = import_pgm(buf)
        assert np.abs(back.array - t.array).max() <= 1 / (2 * 65535)

    def test_export_import_quantization_bound(self):
        rng = np.random.default_rng(11)
        t = DenseTensor(rng.random((8, 5)))
        buf = io.BytesIO()
        export_pgm(t, buf, maxval=255)
        buf.seek(0)
        back = import_pgm(buf)
        assert np.abs(back.array - t.array).max() <= 1 / (2 * 255)

    def test_export_requires_rank_2(self):
        with pytest.raises(ShapeError):
            export_pgm(DenseTensor([1.0, 2.0]), io.BytesIO())
