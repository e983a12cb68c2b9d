"""In-memory compress/decompress entry points.

These produce and consume the same container bytes as the command line, so
anything written by one can be read by the other.
"""

from __future__ import annotations

import numpy as np

from .container import read_file, write_bytes
from .core import grid_from_array
from .pipeline import EbccParams, compress_grid, decompress_grid

DEFAULT_REL_ERROR = 0.01
DEFAULT_Q = 1.0 - 1e-5


def compress(array, rel_error: float = DEFAULT_REL_ERROR, q: float = DEFAULT_Q,
             chunk_shape=None) -> bytes:
    """Compress an array (up to 4D float32) into container bytes.

    Every point of the reconstruction is guaranteed within
    ``rel_error * (chunk max - chunk min)`` of the original.
    """
    grid = grid_from_array(np.asarray(array), chunk_shape)
    params = EbccParams(epsilon_rel=float(rel_error), q=float(q))
    chunks = compress_grid(grid, params)
    return write_bytes(chunks, grid.dims, grid.chunk_shape)


def decompress(buf: bytes) -> np.ndarray:
    """Decompress container bytes back to a 4D float32 array.

    Inputs with fewer than four dimensions come back left-padded to 4D
    (the container stores four extents).
    """
    chunks, dims, _ = read_file(buf)
    return decompress_grid(chunks, dims)
