"""Quality metrics: SSIM, error histograms, radial power spectra, and the
uniform-quantizer reference point used for error-concentration comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ErrorStats, error_stats
from ..errors import ArgumentError

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03
_RANGE_FLOOR = 1e-30


@dataclass(frozen=True)
class MetricReport:
    """Quality summary for one original/reconstruction pair."""

    error_stats: ErrorStats
    ssim: float
    histogram: tuple  # (bin edges, counts)
    spectrum: tuple  # (wavenumbers, power)
    compression_ratio: float


def _gaussian_kernel():
    half = _SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA ** 2))
    return k / k.sum()


def _filter_valid(img, kernel):
    # separable correlation, 'valid' region only
    from numpy.lib.stride_tricks import sliding_window_view

    w = kernel.size
    rows = sliding_window_view(img, w, axis=1) @ kernel
    return sliding_window_view(rows, w, axis=0) @ kernel


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity (11x11 Gaussian window, sigma 1.5).

    The dynamic range is taken from the first argument; identical inputs
    with zero range score 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < _SSIM_WINDOW:
        raise ArgumentError(f"fields must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW}")
    if np.array_equal(a, b):
        return 1.0
    data_range = max(float(a.max() - a.min()), _RANGE_FLOOR)
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    kernel = _gaussian_kernel()
    mu_a = _filter_valid(a, kernel)
    mu_b = _filter_valid(b, kernel)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = _filter_valid(a * a, kernel) - mu_aa
    var_b = _filter_valid(b * b, kernel) - mu_bb
    cov = _filter_valid(a * b, kernel) - mu_ab
    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def error_histogram(a: np.ndarray, b: np.ndarray, bins: int = 65):
    """Histogram of point-wise errors in symmetric bins centered on zero.

    Returns (edges, counts); counts always sum to the element count.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    if bins < 1:
        raise ArgumentError("bins must be >= 1")
    diff = (b - a).ravel()
    span = float(np.abs(diff).max())
    if span == 0.0:
        span = _RANGE_FLOOR
    edges = np.linspace(-span, span, bins + 1)
    counts, _ = np.histogram(diff, bins=edges)
    # values exactly at +span land in the last bin via histogram's closed
    # right edge, so totals always match
    return edges, counts


def radial_power_spectrum(a: np.ndarray):
    """Isotropic power spectrum: periodogram energy summed in integer
    wavenumber annuli (1 .. floor(min(rows, cols)/2)).

    The DC mode is excluded, so total binned power approximates the field
    variance (exactly, for band-limited fields; corner modes above the
    largest full annulus are dropped).
    """
    a = np.asarray(a, dtype=np.float64)
    rows, cols = a.shape
    spec = np.fft.fft2(a) / (rows * cols)
    power = np.abs(spec) ** 2
    k1 = np.fft.fftfreq(rows) * rows
    k2 = np.fft.fftfreq(cols) * cols
    # scale to a common isotropic wavenumber (cycles per min-extent domain)
    m = min(rows, cols)
    kr = np.hypot(k1[:, None] * (m / rows), k2[None, :] * (m / cols))
    kmax = m // 2
    idx = np.rint(kr).astype(np.int64)
    valid = (idx >= 1) & (idx <= kmax)
    binned = np.bincount(idx[valid], weights=power[valid], minlength=kmax + 1)[1:]
    return np.arange(1, kmax + 1), binned


def midtread_quantize(values: np.ndarray, step: float) -> np.ndarray:
    """Uniform midtread quantizer: round to the nearest multiple of step."""
    if step <= 0:
        raise ArgumentError("step must be positive")
    v = np.asarray(values, dtype=np.float64)
    return (np.rint(v / step) * step).astype(np.float32)


def quantizer_ratio(values: np.ndarray, step: float) -> float:
    """Compression ratio of the midtread quantizer under ideal entropy coding.

    Size is modeled as the empirical entropy of the quantized symbols; this
    is the standard quantize-then-losslessly-pack reference point.
    """
    v = np.asarray(values, dtype=np.float64)
    symbols = np.rint(v / step).astype(np.int64)
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    entropy = float(-(p * np.log2(p)).sum())
    entropy = max(entropy, 1.0 / symbols.size)
    return 32.0 / entropy


def quantizer_step_for_ratio(values: np.ndarray, target_ratio: float,
                             tol: float = 0.05) -> float:
    """Step size whose entropy-coded ratio matches ``target_ratio``."""
    v = np.asarray(values, dtype=np.float64)
    span = float(v.max() - v.min())
    lo, hi = span * 1e-9, span * 10.0
    for _ in range(100):
        mid = np.sqrt(lo * hi)
        r = quantizer_ratio(v, mid)
        if abs(r - target_ratio) / target_ratio <= tol:
            return float(mid)
        if r > target_ratio:
            hi = mid
        else:
            lo = mid
    return float(np.sqrt(lo * hi))


def central_mass(edges: np.ndarray, counts: np.ndarray, fraction: float = 0.25) -> float:
    """Fraction of histogram mass inside the central ``fraction`` of the range."""
    span = edges[-1] - edges[0]
    half = 0.5 * fraction * span
    centers = 0.5 * (edges[:-1] + edges[1:])
    inside = np.abs(centers) <= half
    return float(counts[inside].sum() / max(counts.sum(), 1))


def metric_report(original: np.ndarray, reconstructed: np.ndarray,
                  compressed_bytes: int, bins: int = 65) -> MetricReport:
    """Full quality summary for one pair plus the achieved ratio."""
    stats = error_stats(original, reconstructed)
    return MetricReport(
        error_stats=stats,
        ssim=ssim(original, reconstructed),
        histogram=error_histogram(original, reconstructed, bins),
        spectrum=radial_power_spectrum(np.asarray(reconstructed, dtype=np.float64)),
        compression_ratio=float(np.asarray(original).size * 4 / max(compressed_bytes, 1)),
    )
