"""Bit-exact file format for compressed grids.

Layout (all integers little-endian):

  magic 'EBCC' | version u16 | dims 4xu32 | chunk_shape 4xu32 | chunk_count u32
  then per chunk, in row-major tile order:
    mode u8 | epsilon_rel f32 | q f32 | vmin f32 | vmax f32
    base_len u32 | residual_len u32 | payload bytes

The tile order plus dims/chunk_shape determine every chunk's position and
block shape, so the records themselves stay free of redundant geometry.
"""

from __future__ import annotations

import io
import struct

from .core import block_count, pad_dims
from .errors import FormatError, IoError, UnsupportedVersion
from .pipeline import CompressedChunk, Mode

MAGIC = b"EBCC"
VERSION = 1

_FILE_HEADER = struct.Struct("<4sH4I4II")
_RECORD = struct.Struct("<BffffII")


def _tile_origins(dims, chunk_shape):
    for t0 in range(0, dims[0], chunk_shape[0]):
        for p0 in range(0, dims[1], chunk_shape[1]):
            for h0 in range(0, dims[2], chunk_shape[2]):
                for w0 in range(0, dims[3], chunk_shape[3]):
                    yield (t0, p0, h0, w0)


def _block_shape_at(origin, dims, chunk_shape):
    return tuple(
        min(c, d - o) for o, d, c in zip(origin, dims, chunk_shape)
    )


def write_file(chunks, dims, chunk_shape, sink) -> int:
    """Serialize one grid's chunks; returns the byte count written.

    ``sink`` may be a path or a binary file object.  The chunk sequence must
    come from one grid compression (row-major tile order).
    """
    dims = pad_dims(tuple(dims))
    chunk_shape = pad_dims(tuple(chunk_shape))
    expected = block_count(dims, chunk_shape)
    if len(chunks) != expected:
        raise FormatError(
            f"grid {dims} with chunk shape {chunk_shape} needs {expected} chunks, "
            f"got {len(chunks)}"
        )
    buf = io.BytesIO()
    buf.write(_FILE_HEADER.pack(MAGIC, VERSION, *dims, *chunk_shape, len(chunks)))
    for cc in chunks:
        buf.write(_RECORD.pack(int(cc.mode), cc.epsilon_rel, cc.q, cc.vmin, cc.vmax,
                               cc.base_len, cc.residual_len))
        buf.write(cc.payload)
    data = buf.getvalue()
    try:
        if hasattr(sink, "write"):
            sink.write(data)
        else:
            with open(sink, "wb") as fh:
                fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write output: {exc}") from exc
    return len(data)


def write_bytes(chunks, dims, chunk_shape) -> bytes:
    buf = io.BytesIO()
    write_file(chunks, dims, chunk_shape, buf)
    return buf.getvalue()


def read_file(source):
    """Parse a file (path, file object, or bytes) back into chunks.

    Returns ``(chunks, dims, chunk_shape)`` with every chunk's geometry
    reconstructed from the tile order.  Raises FormatError (with the byte
    offset) on any structural damage, UnsupportedVersion on a version bump.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        try:
            with open(source, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read input: {exc}") from exc

    if len(data) < _FILE_HEADER.size:
        raise FormatError("file shorter than header", offset=len(data))
    fields = _FILE_HEADER.unpack_from(data, 0)
    magic, version = fields[0], fields[1]
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported format version {version}", offset=4)
    dims = tuple(fields[2:6])
    chunk_shape = tuple(fields[6:10])
    chunk_count = fields[10]
    if any(c < 1 for c in chunk_shape):  # zero dims denote an empty grid
        raise FormatError(f"bad chunk shape {chunk_shape}", offset=22)
    expected = block_count(dims, chunk_shape)
    if chunk_count != expected:
        raise FormatError(
            f"chunk count {chunk_count} inconsistent with tiling ({expected})",
            offset=42,
        )

    chunks = []
    pos = _FILE_HEADER.size
    for origin in _tile_origins(dims, chunk_shape):
        if pos + _RECORD.size > len(data):
            raise FormatError("truncated chunk record", offset=pos)
        mode_b, eps, q, vmin, vmax, base_len, residual_len = _RECORD.unpack_from(data, pos)
        pos += _RECORD.size
        try:
            mode = Mode(mode_b)
        except ValueError:
            raise FormatError(f"unknown chunk mode {mode_b}", offset=pos - _RECORD.size)
        payload_len = base_len + residual_len
        if pos + payload_len > len(data):
            raise FormatError("truncated chunk payload", offset=pos)
        payload = data[pos : pos + payload_len]
        pos += payload_len
        block_shape = _block_shape_at(origin, dims, chunk_shape)
        t, p, h, w = block_shape
        chunks.append(CompressedChunk(
            mode=mode, epsilon_rel=eps, q=q, vmin=vmin, vmax=vmax,
            base_len=base_len, residual_len=residual_len, payload=payload,
            rows=t * p * h, cols=w, block_shape=block_shape, origin=origin,
        ))
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after last chunk", offset=pos)
    return chunks, dims, chunk_shape
