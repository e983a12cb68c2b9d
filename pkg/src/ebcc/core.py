"""Grid data model: chunking, flattening, normalization, and error metrics.

All public operations are pure functions over immutable inputs; nothing here
keeps state between calls.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError, IngestError

# A chunk whose value range falls below this is stored as a constant; dividing
# by a smaller range would amplify codec noise past any useful error bound.
CONSTANT_RANGE_FLOOR = 1e-30


@dataclass(frozen=True)
class ErrorStats:
    """Point-wise error summary between an original and a reconstruction.

    max_abs and rmse are in the units of the original variable; rel_max is
    max_abs divided by the original's value range (dimensionless).
    """

    max_abs: float
    rel_max: float
    rmse: float

    def as_dict(self) -> dict:
        return {"max_abs": self.max_abs, "rel_max": self.rel_max, "rmse": self.rmse}


@dataclass(frozen=True)
class Chunk:
    """A 2D float field, the unit of compression.

    ``values`` is ``(rows, cols)`` and is float32 before normalization,
    float64 in [0, 1] afterwards.  ``block_shape`` remembers the 4D block the
    chunk was flattened from so the inverse reshape is exact.
    """

    values: np.ndarray
    block_shape: tuple[int, int, int, int]
    origin: tuple[int, int, int, int] = (0, 0, 0, 0)
    vmin: float = 0.0
    vmax: float = 0.0
    normalized: bool = False
    constant: bool = False

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GridArray:
    """A dense 4D float32 array (time, level, lat, lon) plus its chunking."""

    data: np.ndarray
    chunk_shape: tuple[int, int, int, int]

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape


def _check_finite(arr: np.ndarray) -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        flat = int(np.argmin(finite.ravel()))
        index = tuple(int(i) for i in np.unravel_index(flat, arr.shape))
        raise IngestError(f"non-finite value at index {index}", index=index)


def pad_dims(shape: tuple[int, ...]) -> tuple[int, int, int, int]:
    """Left-pad a shape with ones to exactly four extents."""
    if not 1 <= len(shape) <= 4:
        raise ArgumentError(f"expected 1-4 dimensions, got {len(shape)}")
    return (1,) * (4 - len(shape)) + tuple(int(s) for s in shape)


def grid_from_array(arr: np.ndarray, chunk_shape=None) -> GridArray:
    """Validate and wrap an array (up to 4D) as a GridArray.

    The default chunk shape is one 2D slice per (time, level) pair.
    """
    data = np.ascontiguousarray(arr, dtype=np.float32)
    if data.size == 0:
        raise IngestError("empty input array")
    _check_finite(data)
    data = data.reshape(pad_dims(data.shape))
    t, p, h, w = data.shape
    if chunk_shape is None:
        chunk_shape = (1, 1, h, w)
    chunk_shape = tuple(int(c) for c in chunk_shape)
    if len(chunk_shape) != 4 or any(c < 1 for c in chunk_shape):
        raise ArgumentError(f"bad chunk shape {chunk_shape}")
    return GridArray(data=data, chunk_shape=chunk_shape)


def iter_blocks(grid: GridArray):
    """Yield ``(origin, block)`` pairs tiling the grid row-major.

    Edge blocks are smaller than ``chunk_shape`` when the extents do not
    divide evenly; every block is compressed independently.
    """
    dims = grid.dims
    cs = grid.chunk_shape
    for t0 in range(0, dims[0], cs[0]):
        for p0 in range(0, dims[1], cs[1]):
            for h0 in range(0, dims[2], cs[2]):
                for w0 in range(0, dims[3], cs[3]):
                    origin = (t0, p0, h0, w0)
                    block = grid.data[
                        t0 : t0 + cs[0],
                        p0 : p0 + cs[1],
                        h0 : h0 + cs[2],
                        w0 : w0 + cs[3],
                    ]
                    yield origin, block


def block_count(dims, chunk_shape) -> int:
    n = 1
    for d, c in zip(dims, chunk_shape):
        n *= -(-d // c)
    return n


def flatten_chunk(block: np.ndarray, origin=(0, 0, 0, 0)) -> Chunk:
    """Flatten a 4D (T, P, H, W) block into a (T*P*H, W) chunk.

    Row-major order is preserved, so the inverse reshape is bitwise exact.
    """
    block = np.asarray(block, dtype=np.float32)
    if block.size == 0:
        raise IngestError("empty block")
    _check_finite(block)
    shape4 = pad_dims(block.shape)
    t, p, h, w = shape4
    values = block.reshape(t * p * h, w)
    return Chunk(values=values, block_shape=shape4, origin=tuple(origin))


def unflatten_chunk(values: np.ndarray, block_shape) -> np.ndarray:
    t, p, h, w = block_shape
    if values.size != t * p * h * w:
        raise ArgumentError(
            f"cannot reshape {values.size} values into block {tuple(block_shape)}"
        )
    return values.reshape(t, p, h, w)


def normalize(chunk: Chunk) -> Chunk:
    """Map chunk values affinely onto [0, 1], recording the original extrema.

    Chunks with a vanishing range are flagged constant and zero-filled.
    """
    values = chunk.values
    vmin = float(values.min())
    vmax = float(values.max())
    vrange = vmax - vmin
    if vrange < CONSTANT_RANGE_FLOOR:
        return replace(
            chunk,
            values=np.zeros_like(values, dtype=np.float64),
            vmin=vmin,
            vmax=vmax,
            normalized=True,
            constant=True,
        )
    norm = (values.astype(np.float64) - vmin) / vrange
    return replace(chunk, values=norm, vmin=vmin, vmax=vmax, normalized=True)


def denormalize(values: np.ndarray, vmin: float, vmax: float) -> np.ndarray:
    """Inverse of :func:`normalize`; returns float32."""
    out = vmin + np.asarray(values, dtype=np.float64) * (vmax - vmin)
    return out.astype(np.float32)


def error_stats(original: np.ndarray, reconstructed: np.ndarray) -> ErrorStats:
    """Max absolute error, range-relative max error, and RMSE.

    The range in the denominator of rel_max is taken from the original data.
    A constant original with a nonzero error yields rel_max = inf.
    """
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(reconstructed, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(b - a)
    max_abs = float(diff.max())
    rmse = float(np.sqrt(np.mean(diff * diff)))
    vrange = float(a.max() - a.min())
    if vrange > 0.0:
        rel_max = max_abs / vrange
    else:
        rel_max = 0.0 if max_abs == 0.0 else float("inf")
    return ErrorStats(max_abs=max_abs, rel_max=rel_max, rmse=rmse)
