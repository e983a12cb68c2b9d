import numpy as np
import pytest

from ebcc.bench.metrics import (
    central_mass,
    error_histogram,
    metric_report,
    midtread_quantize,
    quantizer_ratio,
    quantizer_step_for_ratio,
    radial_power_spectrum,
    ssim,
)
from ebcc.errors import ArgumentError
from tests.conftest import field


def ssim_reference(a, b):
    """Windowed reference implementation: explicit loops over positions."""
    half = 5
    x = np.arange(-half, half + 1, dtype=np.float64)
    k1d = np.exp(-(x * x) / (2 * 1.5 ** 2))
    k1d /= k1d.sum()
    kernel = np.outer(k1d, k1d)
    data_range = a.max() - a.min()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    rows, cols = a.shape
    vals = []
    for i in range(rows - 10):
        for j in range(cols - 10):
            wa = a[i:i + 11, j:j + 11]
            wb = b[i:i + 11, j:j + 11]
            mu_a = (wa * kernel).sum()
            mu_b = (wb * kernel).sum()
            var_a = (wa * wa * kernel).sum() - mu_a ** 2
            var_b = (wb * wb * kernel).sum() - mu_b ** 2
            cov = (wa * wb * kernel).sum() - mu_a * mu_b
            vals.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                        / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(np.mean(vals))


class TestSsim:
    def test_identity_is_one(self, rng):
        a = rng.standard_normal((16, 16))
        assert ssim(a, a) == 1.0

    def test_small_shift_near_one(self, rng):
        a = rng.standard_normal((32, 32))
        shift = 0.001 * (a.max() - a.min())
        value = ssim(a, a + shift)
        assert 0.99 < value < 1.0

    def test_sign_flip_near_minus_one(self):
        # oscillation fast enough that every local window has ~zero mean,
        # so the anticorrelation term dominates
        n = 64
        y, x = np.mgrid[0:n, 0:n]
        a = np.sin(2 * np.pi * 16 * x / n) * np.sin(2 * np.pi * 16 * y / n)
        value = ssim(a, -a)
        assert value < -0.9
        assert value == pytest.approx(ssim_reference(a, -a), rel=1e-9)

    def test_matches_reference_loops(self, rng):
        a = rng.standard_normal((24, 24))
        b = a + 0.05 * rng.standard_normal((24, 24))
        assert ssim(a, b) == pytest.approx(ssim_reference(a, b), rel=1e-9)

    def test_degenerate_range(self):
        a = np.zeros((16, 16))
        assert ssim(a, a) == 1.0
        value = ssim(a, a + 1e-35)
        assert np.isfinite(value)

    def test_too_small_rejected(self):
        with pytest.raises(ArgumentError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestHistogram:
    def test_identical_arrays_center_bin(self, rng):
        a = rng.standard_normal((10, 10))
        edges, counts = error_histogram(a, a, bins=65)
        assert counts.sum() == a.size
        assert counts[32] == a.size

    def test_counts_sum_to_n(self, rng):
        a = rng.standard_normal((20, 20))
        b = a + rng.standard_normal((20, 20)) * 0.3
        edges, counts = error_histogram(a, b, bins=33)
        assert counts.sum() == a.size
        assert len(edges) == 34

    def test_symmetric_edges(self, rng):
        a = rng.standard_normal((20, 20))
        b = a + rng.standard_normal((20, 20))
        edges, _ = error_histogram(a, b)
        assert edges[0] == -edges[-1]
        assert np.abs(edges[0]) == np.abs(b - a).max()

    def test_uniform_noise_roughly_flat(self):
        rng = np.random.default_rng(99)
        a = np.zeros(200_000)
        b = rng.uniform(-1, 1, 200_000)
        b[0], b[1] = 1.0, -1.0  # pin the span so bins cover (-1, 1) exactly
        _, counts = error_histogram(a.reshape(400, 500), b.reshape(400, 500), bins=20)
        expected = a.size / 20
        # 5-sigma Poisson window around the flat expectation
        assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


class TestSpectrum:
    def test_constant_has_no_power(self):
        k, p = radial_power_spectrum(np.full((32, 32), 3.0))
        assert len(k) == 16
        assert np.all(p == 0.0)

    def test_single_sinusoid_lands_in_right_bin(self):
        n = 64
        y, x = np.mgrid[0:n, 0:n]
        f = np.sin(2 * np.pi * 5 * x / n)
        k, p = radial_power_spectrum(f)
        assert k[np.argmax(p)] == 5
        assert p[4] > 100 * np.delete(p, 4).max()

    def test_parseval_on_smooth_field(self):
        f = field("smooth-fourier", 96, 96, seed=2).astype(np.float64)
        k, p = radial_power_spectrum(f)
        assert p.sum() == pytest.approx(f.var(), rel=0.02)

    def test_white_noise_flat_per_mode(self, rng):
        f = rng.standard_normal((128, 128))
        k, p = radial_power_spectrum(f)
        k1 = np.fft.fftfreq(128) * 128
        kr = np.hypot(k1[:, None], k1[None, :])
        idx = np.rint(kr).astype(int)
        mode_counts = np.bincount(idx[(idx >= 1) & (idx <= 64)].ravel(), minlength=65)[1:]
        per_mode = p / mode_counts
        inner = per_mode[2:50]
        assert inner.max() / inner.min() < 3.0

    def test_spectrum_length(self, rng):
        f = rng.standard_normal((40, 60))
        k, p = radial_power_spectrum(f)
        assert len(k) == len(p) == 20


class TestQuantizerBaseline:
    def test_midtread_is_unbiased_rounding(self):
        v = np.array([0.0, 0.2, 0.6, -0.6, 1.4])
        out = midtread_quantize(v, 1.0)
        assert np.array_equal(out, np.array([0.0, 0.0, 1.0, -1.0, 1.0], np.float32))

    def test_max_error_is_half_step(self, rng):
        v = rng.standard_normal(1000)
        step = 0.25
        out = midtread_quantize(v, step)
        assert np.abs(out - v).max() <= step / 2 + 1e-12

    def test_ratio_decreases_with_finer_step(self, rng):
        v = rng.standard_normal((64, 64))
        assert quantizer_ratio(v, 0.5) > quantizer_ratio(v, 0.01)

    def test_step_search_matches_target(self, rng):
        v = field("smooth-fourier", 64, 64, seed=1).astype(np.float64)
        for target in (8.0, 20.0):
            step = quantizer_step_for_ratio(v, target)
            assert quantizer_ratio(v, step) == pytest.approx(target, rel=0.06)

    def test_central_mass_of_uniform_errors(self):
        edges = np.linspace(-1, 1, 65)
        counts = np.full(64, 10)
        assert central_mass(edges, counts, 0.25) == pytest.approx(0.25, abs=0.05)


class TestMetricReport:
    def test_invariants(self, rng):
        a = rng.standard_normal((20, 30))
        b = a + 0.01 * rng.standard_normal((20, 30))
        report = metric_report(a, b, compressed_bytes=300)
        edges, counts = report.histogram
        assert counts.sum() == a.size
        wavenumbers, power = report.spectrum
        assert len(wavenumbers) == len(power) == 10  # floor(min(rows, cols) / 2)
        assert -1.0 <= report.ssim <= 1.0
        assert report.compression_ratio == pytest.approx(a.size * 4 / 300)
        assert report.error_stats.max_abs >= report.error_stats.rmse >= 0.0
