import io

import numpy as np
import pytest

from ebcc.container import MAGIC, VERSION, read_file, write_bytes, write_file
from ebcc.core import grid_from_array
from ebcc.errors import FormatError, IoError, UnsupportedVersion
from ebcc.pipeline import EbccParams, compress_grid, decompress_grid
from tests.conftest import field


def compressed_grid(rows=12, cols=12, chunk=(1, 1, 6, 12), seed=0, eps=0.05):
    data = field("smooth-fourier", rows, cols, seed).reshape(1, 1, rows, cols)
    grid = grid_from_array(data, chunk)
    chunks = compress_grid(grid, EbccParams(epsilon_rel=eps))
    return grid, chunks


class TestRoundTrip:
    def test_empty_grid_header_only(self):
        blob = write_bytes([], (0, 0, 0, 0), (1, 1, 1, 1))
        assert len(blob) == 42
        chunks, dims, chunk_shape = read_file(blob)
        assert chunks == [] and dims == (0, 0, 0, 0)

    def test_single_chunk_bitwise(self):
        grid, chunks = compressed_grid(chunk=(1, 1, 12, 12))
        blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
        back, dims, chunk_shape = read_file(blob)
        assert dims == grid.dims and chunk_shape == grid.chunk_shape
        assert write_bytes(back, dims, chunk_shape) == blob

    def test_multi_chunk_bitwise_and_geometry(self):
        grid, chunks = compressed_grid()
        blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
        back, dims, _ = read_file(blob)
        assert len(back) == len(chunks)
        for orig, rec in zip(chunks, back):
            assert rec.payload == orig.payload
            assert rec.origin == orig.origin
            assert rec.block_shape == orig.block_shape
            assert (rec.rows, rec.cols) == (orig.rows, orig.cols)
        out = decompress_grid(back, dims)
        assert np.array_equal(out, decompress_grid(chunks, grid.dims))

    def test_fuzzed_multi_chunk_round_trips(self):
        for seed in range(5):
            rows = 8 + 4 * seed
            grid, chunks = compressed_grid(rows=rows, cols=10,
                                           chunk=(1, 1, 5, 7), seed=seed)
            blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
            back, dims, chunk_shape = read_file(blob)
            assert write_bytes(back, dims, chunk_shape) == blob

    def test_file_object_and_path(self, tmp_path):
        grid, chunks = compressed_grid()
        path = tmp_path / "grid.ebcc"
        n = write_file(chunks, grid.dims, grid.chunk_shape, str(path))
        assert path.stat().st_size == n
        back, dims, _ = read_file(str(path))
        assert len(back) == len(chunks)
        buf = io.BytesIO()
        write_file(chunks, grid.dims, grid.chunk_shape, buf)
        assert buf.getvalue() == path.read_bytes()

    def test_wrong_chunk_count_rejected_on_write(self):
        grid, chunks = compressed_grid()
        with pytest.raises(FormatError):
            write_bytes(chunks[:-1], grid.dims, grid.chunk_shape)

    def test_missing_file_is_io_error(self):
        with pytest.raises(IoError):
            read_file("/nonexistent/path.ebcc")


class TestFaultInjection:
    def _blob(self):
        grid, chunks = compressed_grid()
        return write_bytes(chunks, grid.dims, grid.chunk_shape)

    def test_corrupt_magic(self):
        blob = bytearray(self._blob())
        blob[0] = 0x00
        with pytest.raises(FormatError) as exc:
            read_file(bytes(blob))
        assert exc.value.offset == 0

    def test_version_bump_rejected(self):
        blob = bytearray(self._blob())
        blob[4] = VERSION + 1
        with pytest.raises(UnsupportedVersion):
            read_file(bytes(blob))

    def test_truncations_always_format_error(self):
        blob = self._blob()
        for cut in range(0, len(blob), 3):
            with pytest.raises((FormatError, UnsupportedVersion)):
                read_file(blob[:cut])

    def test_trailing_garbage_rejected(self):
        blob = self._blob()
        with pytest.raises(FormatError) as exc:
            read_file(blob + b"\x00")
        assert exc.value.offset == len(blob)

    def test_bad_mode_rejected(self):
        blob = bytearray(self._blob())
        blob[42] = 99  # first record's mode byte
        with pytest.raises(FormatError):
            read_file(bytes(blob))

    def test_inconsistent_chunk_count_rejected(self):
        blob = bytearray(self._blob())
        blob[38:42] = (999).to_bytes(4, "little")
        with pytest.raises(FormatError):
            read_file(bytes(blob))

    def test_magic_constant(self):
        assert self._blob()[:4] == MAGIC
