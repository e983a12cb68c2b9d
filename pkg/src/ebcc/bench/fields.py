"""Deterministic synthetic field generators for the benchmark suites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError

KINDS = ("smooth-fourier", "vortex", "spiky")


@dataclass(frozen=True)
class SyntheticFieldSpec:
    kind: str
    rows: int
    cols: int
    seed: int = 0
    spike_fraction: float = 1e-4
    spectral_slope: float = 3.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown field kind {self.kind!r}; choose from {KINDS}")
        if self.rows < 4 or self.cols < 4:
            raise ArgumentError("fields must be at least 4x4")


def _smooth_fourier(rows, cols, seed, slope):
    rng = np.random.default_rng(seed)
    k1 = np.fft.fftfreq(rows)[:, None]
    k2 = np.fft.fftfreq(cols)[None, :]
    k = np.sqrt(k1 * k1 + k2 * k2)
    k[0, 0] = 1.0
    spectrum = (rng.standard_normal((rows, cols))
                + 1j * rng.standard_normal((rows, cols))) * k ** (-slope / 2.0)
    raw = np.fft.ifft2(spectrum).real
    # out-of-place: the .real view is non-contiguous, and callers poke
    # values into field.ravel()
    return (raw - raw.mean()) / raw.std()


def _vortex_speed(rows, cols):
    # Rankine-style vortex: solid-body core, 1/r decay outside
    yy = np.arange(rows)[:, None] - (rows - 1) / 2.0
    xx = np.arange(cols)[None, :] - (cols - 1) / 2.0
    r = np.hypot(yy, xx)
    core = 0.18 * min(rows, cols)
    speed = np.where(r <= core, r / core, core / np.maximum(r, 1e-9))
    return speed


def make_field(spec: SyntheticFieldSpec) -> np.ndarray:
    """Build one float32 field; deterministic for a given spec."""
    if spec.kind == "smooth-fourier":
        field = _smooth_fourier(spec.rows, spec.cols, spec.seed, spec.spectral_slope)
    elif spec.kind == "vortex":
        field = _vortex_speed(spec.rows, spec.cols)
        # mild smooth perturbation so seeds differ
        field = field + 0.05 * _smooth_fourier(spec.rows, spec.cols, spec.seed, 3.0)
    else:  # spiky
        field = _smooth_fourier(spec.rows, spec.cols, spec.seed, spec.spectral_slope)
        rng = np.random.default_rng(spec.seed + 1000)
        n = spec.rows * spec.cols
        count = max(1, round(spec.spike_fraction * n))
        idx = rng.choice(n, size=count, replace=False)
        # isolated points with heavy-tailed magnitudes (spanning roughly
        # 3 to 40 standard deviations of the background)
        amp = 3.0 * np.exp(rng.normal(0.8, 0.7, size=count))
        field.ravel()[idx] += amp * rng.choice([-1.0, 1.0], size=count)
    return field.astype(np.float32)


def vortex_wind(rows, cols, seed=0, background=0.1):
    """Wind components (u, v) of a vortex plus a weak smooth background."""
    yy = np.arange(rows)[:, None] - (rows - 1) / 2.0
    xx = np.arange(cols)[None, :] - (cols - 1) / 2.0
    r = np.maximum(np.hypot(yy, xx), 1e-9)
    speed = _vortex_speed(rows, cols)
    u = -speed * yy / r + background * _smooth_fourier(rows, cols, seed, 3.0)
    v = speed * xx / r + background * _smooth_fourier(rows, cols, seed + 1, 3.0)
    return u.astype(np.float32), v.astype(np.float32)


def rotation_wind(rows, cols, omega=1.0, center=None):
    """Solid-body rotation (u, v) = omega * (-(y - yc), x - xc)."""
    if center is None:
        center = ((rows - 1) / 2.0, (cols - 1) / 2.0)
    yc, xc = center
    yy = np.arange(rows)[:, None] - yc
    xx = np.arange(cols)[None, :] - xc
    u = (-omega * yy) * np.ones((1, cols))
    v = (omega * xx) * np.ones((rows, 1))
    return u.astype(np.float32), v.astype(np.float32)
