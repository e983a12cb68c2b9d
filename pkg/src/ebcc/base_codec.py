"""Ratio-parameterized lossy base layer over the wavelet + bit-plane coder.

The base layer contract: given a normalized chunk and a target compression
ratio, emit at most ``chunk_bytes / ratio`` bytes and report which fraction
of point errors already sits under the caller's epsilon.  The reference
implementation truncates an embedded stream to the byte budget; any codec
with the same contract (for instance a JPEG2000 backend) can be swapped in
behind these two functions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import spiht
from .dwt import default_levels, forward_dwt, inverse_dwt
from .errors import ArgumentError

BYTES_PER_VALUE = 4  # ratios are defined against the float32 footprint


@dataclass(frozen=True)
class BaseEncoding:
    """One base-layer encoding attempt and its feedback measurements."""

    data: bytes
    achieved_ratio: float
    q_achieved: float
    decoded: np.ndarray  # normalized-domain reconstruction, reused upstream


def budget_for_ratio(rows: int, cols: int, ratio: float) -> int:
    if ratio < 1.0:
        raise ArgumentError(f"ratio must be >= 1, got {ratio}")
    raw = rows * cols * BYTES_PER_VALUE
    return max(spiht.HEADER_SIZE, int(raw // ratio))


def base_encode_budget(values: np.ndarray, budget: int, epsilon: float) -> BaseEncoding:
    """Encode a normalized field into at most ``budget`` bytes.

    ``q_achieved`` is measured by an internal decode: the fraction of points
    whose reconstruction error does not exceed ``epsilon``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ArgumentError(f"epsilon must be in (0, 1), got {epsilon}")
    rows, cols = values.shape
    pyramid = forward_dwt(values, default_levels(rows, cols))
    stream = spiht.spiht_encode(pyramid, max_bytes=budget)
    decoded = base_decode(stream.data)
    err = np.abs(decoded - values)
    q_achieved = float(np.mean(err <= epsilon))
    achieved = rows * cols * BYTES_PER_VALUE / len(stream.data)
    return BaseEncoding(
        data=stream.data,
        achieved_ratio=achieved,
        q_achieved=q_achieved,
        decoded=decoded,
    )


def base_encode(values: np.ndarray, ratio: float, epsilon: float) -> BaseEncoding:
    """Encode a normalized field at a target compression ratio."""
    rows, cols = values.shape
    return base_encode_budget(values, budget_for_ratio(rows, cols, ratio), epsilon)


def dequantized_field(data: bytes, prefix_len: int | None = None,
                      midpoint: bool = True) -> np.ndarray:
    """Decode a stream prefix to a field, dequantizing to interval midpoints.

    The bit-plane decoder returns lower-bound magnitudes; shifting placed
    coefficients by half the stopping plane's threshold halves the expected
    quantization error before the inverse transform.
    """
    pyramid, n_last = spiht.decode_with_plane(data, prefix_len)
    if midpoint and n_last is not None:
        offset = float(np.ldexp(0.5, n_last))
        coeffs = pyramid.coeffs + np.sign(pyramid.coeffs) * offset
        pyramid = replace(pyramid, coeffs=coeffs)
    return inverse_dwt(pyramid)


def base_decode(data: bytes) -> np.ndarray:
    """Reconstruct the normalized field from base-layer bytes.

    The base layer keeps the decoder's lower-bound magnitudes: every extra
    byte then tightens each point monotonically, which is what the quantile
    feedback loop measures.  The residual layer, whose truncation point is
    chosen against the absolute bound, uses midpoint dequantization instead.
    """
    return dequantized_field(data, midpoint=False)
