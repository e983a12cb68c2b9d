"""System-level acceptance checks.

Each test prints one PASS/FAIL line so the whole gate can be read off a
plain ``pytest -s tests/test_acceptance.py`` run.  Tolerances are fixed
here, not configurable.
"""

import time

import numpy as np

from ebcc import spiht
from ebcc.bench.fields import SyntheticFieldSpec, make_field, rotation_wind, vortex_wind
from ebcc.bench.metrics import (
    central_mass,
    midtread_quantize,
    quantizer_ratio,
    quantizer_step_for_ratio,
    ssim,
)
from ebcc.bench.flow import advect_particles, horizontal_divergence
from ebcc.bench.suites import run_trajectory_case, trajectory_scenarios
from ebcc.container import read_file, write_bytes
from ebcc.core import error_stats, flatten_chunk, grid_from_array
from ebcc.dwt import forward_dwt, inverse_dwt
from ebcc.errors import FormatError, UnsupportedVersion
from ebcc.pipeline import EbccParams, compress_chunk, compress_grid, decompress_chunk

EPS_GRID = (0.001, 0.005, 0.01, 0.05, 0.10)
Q_GRID = (1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 1e-6, 1.0)
KINDS = ("smooth-fourier", "vortex", "spiky")


def _report(num, name, ok, detail=""):
    print(f"\nACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {name}"
          + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num} failed: {name} {detail}"


def _field(kind, rows, cols, seed):
    return make_field(SyntheticFieldSpec(kind, rows, cols, seed))


def _chunk(kind, rows, cols, seed):
    return flatten_chunk(_field(kind, rows, cols, seed).reshape(1, 1, rows, cols))


def test_01_error_bound_guarantee():
    """Range-relative max error never exceeds the target, over 1000+ fuzzed
    chunks spanning all kinds, sizes 8..256, the epsilon and q grids."""
    rng = np.random.default_rng(2024)
    started = time.monotonic()
    cases = []
    # forced corners plus log-uniform random shapes
    forced = [(8, 8), (256, 256), (8, 256), (255, 17), (33, 129)]
    total = 1000
    for i in range(total):
        if i < len(forced):
            rows, cols = forced[i]
        else:
            rows = int(np.exp(rng.uniform(np.log(8), np.log(256))))
            cols = int(np.exp(rng.uniform(np.log(8), np.log(256))))
        cases.append((rows, cols, KINDS[i % 3], EPS_GRID[i % 5], Q_GRID[(i // 5) % 5]))

    violations = 0
    worst = 0.0
    for i, (rows, cols, kind, eps, q) in enumerate(cases):
        chunk = _chunk(kind, rows, cols, seed=i)
        cc = compress_chunk(chunk, EbccParams(epsilon_rel=eps, q=q))
        st = error_stats(chunk.values, decompress_chunk(cc))
        worst = max(worst, st.rel_max / eps)
        if st.rel_max > eps:
            violations += 1
    elapsed = time.monotonic() - started
    _report(1, "error-bound guarantee",
            violations == 0 and elapsed < 600.0,
            f"{total} chunks, worst rel_max/eps {worst:.4f}, {elapsed:.0f}s")


def test_02_fallback_dominance():
    """Output size with any q never exceeds the pure-base output size."""
    sizes = []
    bad = 0
    for kind in ("smooth-fourier", "spiky"):
        for seed in (0, 1):
            chunk = _chunk(kind, 64, 64, seed)
            for eps in (0.001, 0.01, 0.1):
                pure = compress_chunk(chunk, EbccParams(epsilon_rel=eps, q=1.0)).nbytes
                for q in (1 - 1e-3, 1 - 1e-5, 1 - 1e-7):
                    got = compress_chunk(chunk, EbccParams(epsilon_rel=eps, q=q)).nbytes
                    sizes.append((got, pure))
                    bad += got > pure
    _report(2, "fallback dominance", bad == 0, f"{len(sizes)} cells, {bad} violations")


def test_03_embedded_stream_properties():
    """Every prefix decodes; max coefficient error never increases with
    prefix length; the full stream reproduces plane quantization exactly."""
    rng = np.random.default_rng(7)
    pyramids = 200
    sym_fail = prefix_fail = mono_fail = 0
    for i in range(pyramids):
        rows = int(rng.integers(8, 21))
        cols = int(rng.integers(8, 21))
        scale = 10.0 ** rng.uniform(-3, 3)
        pyramid = forward_dwt(rng.standard_normal((rows, cols)) * scale)
        stream = spiht.spiht_encode(pyramid, max_bytes=400)
        n_max = spiht.parse_header(stream.data)[0]
        prev = np.inf
        for cut in range(len(stream.data) + 1):
            try:
                dec = spiht.spiht_decode(stream.data, cut)
            except Exception:
                prefix_fail += 1
                break
            err = float(np.abs(dec.coeffs - pyramid.coeffs).max())
            if cut >= spiht.HEADER_SIZE:
                if err > prev:
                    mono_fail += 1
                prev = err
        full = spiht.spiht_encode(pyramid)  # unbudgeted: full depth
        expect = spiht.quantize_plane(pyramid.coeffs, n_max - spiht.DEFAULT_PLANES + 1)
        if not np.array_equal(spiht.spiht_decode(full.data).coeffs, expect):
            sym_fail += 1
    ok = sym_fail == 0 and prefix_fail == 0 and mono_fail == 0
    _report(3, "embedded-stream properties", ok,
            f"{pyramids} pyramids, fails: prefix {prefix_fail}, "
            f"monotone {mono_fail}, symmetry {sym_fail}")


def test_04_dwt_round_trip_and_linearity():
    rng = np.random.default_rng(11)
    worst = 0.0
    for shape in [(2, 2), (7, 5), (8, 8), (33, 17), (64, 64), (127, 255),
                  (256, 256), (3, 64), (64, 3)]:
        x = rng.standard_normal(shape) * 10
        y = inverse_dwt(forward_dwt(x))
        vrange = float(x.max() - x.min())
        worst = max(worst, np.abs(y - x).max() / (1e-5 * (vrange + 1)))
    a = rng.standard_normal((48, 40))
    b = rng.standard_normal((48, 40))
    lhs = forward_dwt(3.0 * a - 0.5 * b, 3).coeffs
    rhs = 3.0 * forward_dwt(a, 3).coeffs - 0.5 * forward_dwt(b, 3).coeffs
    lin = np.abs(lhs - rhs).max() / max(np.abs(rhs).max(), 1.0)
    ok = worst <= 1.0 and lin <= 1e-5
    _report(4, "wavelet round trip and linearity", ok,
            f"worst rt fraction {worst:.2e}, linearity {lin:.2e}")


def test_05_rate_distortion_shape():
    """Looser bounds must buy at least 5x more compression on smooth
    fields, and the tight bound must stay visually indistinguishable."""
    field = _field("smooth-fourier", 128, 128, seed=5)
    grid = grid_from_array(field)

    def run(eps):
        chunks = compress_grid(grid, EbccParams(epsilon_rel=eps))
        blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
        return field.nbytes / len(blob), decompress_chunk(chunks[0])

    ratio_tight, rec_tight = run(0.001)
    ratio_loose, _ = run(0.10)
    spread = ratio_loose / ratio_tight
    quality = ssim(field, rec_tight)
    ok = spread >= 5.0 and quality >= 0.9999
    _report(5, "rate-distortion shape", ok,
            f"spread {spread:.1f}x, ssim at 0.1% = {quality:.6f}")


def test_06_residual_layer_benefit():
    """On spiky fields the two-layer mode must beat pure base coding for
    at least 80% of seeds at the default quantile."""
    size, trials = 768, 10
    wins = 0
    for seed in range(trials):
        chunk = _chunk("spiky", size, size, seed)
        two = compress_chunk(chunk, EbccParams(epsilon_rel=0.01, q=1 - 1e-5))
        pure = compress_chunk(chunk, EbccParams(epsilon_rel=0.01, q=1.0))
        wins += two.nbytes < pure.nbytes
    _report(6, "residual-layer benefit", wins >= 0.8 * trials,
            f"{wins}/{trials} seeds improved")


def test_07_error_concentration():
    """At a matched ratio, errors must concentrate in the central quartile
    more than a uniform midtread quantizer's do."""
    results = []
    for seed in (0, 1, 2):
        field = _field("smooth-fourier", 128, 128, seed).astype(np.float64)
        chunk = flatten_chunk(field.reshape(1, 1, 128, 128))
        cc = compress_chunk(chunk, EbccParams(epsilon_rel=0.01))
        rec = decompress_chunk(cc)
        ratio = field.size * 4 / cc.nbytes
        step = quantizer_step_for_ratio(field, ratio, tol=0.05)
        qratio = quantizer_ratio(field, step)
        assert abs(qratio - ratio) / ratio <= 0.10, "baseline must match the ratio"
        qrec = midtread_quantize(field, step)
        span = max(np.abs(rec - field).max(), np.abs(qrec - field).max())
        bins = np.linspace(-span, span, 65)
        ours_counts, _ = np.histogram((rec - field).ravel(), bins=bins)
        theirs_counts, _ = np.histogram((qrec - field).ravel(), bins=bins)
        results.append((central_mass(bins, ours_counts),
                        central_mass(bins, theirs_counts)))
    ok = all(o > t for o, t in results)
    detail = ", ".join(f"{o:.2f}>{t:.2f}" for o, t in results)
    _report(7, "error concentration vs uniform quantizer", ok, detail)


def test_08_trajectory_sensitivity():
    """Density error must be non-decreasing in the error target on every
    wind scenario, and the integrator itself must hold orbits to 0.1%."""
    # integrator validation, independent of compression
    rows = cols = 64
    u, v = rotation_wind(rows, cols, omega=1.0)
    center = ((cols - 1) / 2.0, (rows - 1) / 2.0)
    radius = 12.0
    steps = 400
    traj = advect_particles([u], [v], np.array([[center[0] + radius, center[1]]]),
                            dt=2 * np.pi / steps, steps=steps)
    r_end = np.hypot(traj[-1, 0, 0] - center[0], traj[-1, 0, 1] - center[1])
    drift = abs(r_end - radius) / radius
    assert drift < 1e-3

    rng = np.random.default_rng(3)
    seeds_xy = np.column_stack([rng.uniform(16, 48, 1200), rng.uniform(16, 48, 1200)])
    all_monotone = True
    details = []
    for name, (us, vs) in trajectory_scenarios(rows, cols, seed=0).items():
        rmses = []
        for eps in EPS_GRID:
            dens, _, _, _ = run_trajectory_case(us, vs, eps, 1 - 1e-5, rows, cols,
                                                seeds_xy, dt=0.04, steps=50)
            rmses.append(dens)
        monotone = all(rmses[i] <= rmses[i + 1] + 1e-15 for i in range(len(rmses) - 1))
        all_monotone &= monotone
        details.append(f"{name}: " + "->".join(f"{r:.2e}" for r in rmses))
    _report(8, "trajectory sensitivity", all_monotone,
            f"orbit drift {drift:.2e}; " + "; ".join(details))


def test_09_divergence_fidelity():
    u, v = vortex_wind(128, 128, seed=0)
    div0 = horizontal_divergence(u, v, 1.0, 1.0)

    def div_rmse(eps):
        params = EbccParams(epsilon_rel=eps)
        ru = decompress_chunk(compress_chunk(flatten_chunk(u.reshape(1, 1, 128, 128)), params))
        rv = decompress_chunk(compress_chunk(flatten_chunk(v.reshape(1, 1, 128, 128)), params))
        d = horizontal_divergence(ru, rv, 1.0, 1.0) - div0
        return float(np.sqrt(np.mean(d * d)))

    tight, loose = div_rmse(0.001), div_rmse(0.10)
    ok = tight <= 0.2 * loose
    _report(9, "derived-divergence fidelity", ok,
            f"rmse 0.1% = {tight:.2e} vs 10% = {loose:.2e} (ratio {tight / loose:.3f})")


def test_10_container_robustness():
    rng = np.random.default_rng(13)
    bitwise_fail = 0
    crash_fail = 0
    blobs = []
    for trial in range(8):
        rows = int(rng.integers(8, 25))
        cols = int(rng.integers(8, 25))
        data = (rng.standard_normal((1, 1, rows, cols)) * 10).astype(np.float32)
        ch = max(4, rows // 2)
        grid = grid_from_array(data, (1, 1, ch, cols))
        chunks = compress_grid(grid, EbccParams(epsilon_rel=0.05))
        blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
        back, dims, cs = read_file(blob)
        if write_bytes(back, dims, cs) != blob:
            bitwise_fail += 1
        blobs.append(blob)

    for blob in blobs:
        for cut in range(0, len(blob), max(1, len(blob) // 40)):
            try:
                read_file(blob[:cut])
                crash_fail += 1  # truncation must never parse silently
            except (FormatError, UnsupportedVersion):
                pass
            except Exception:
                crash_fail += 1
        for _ in range(25):
            corrupt = bytearray(blob)
            pos = int(rng.integers(0, len(blob)))
            corrupt[pos] ^= 0xFF
            try:
                read_file(bytes(corrupt))  # may parse if payload-only damage
            except (FormatError, UnsupportedVersion):
                pass
            except Exception:
                crash_fail += 1
    ok = bitwise_fail == 0 and crash_fail == 0
    _report(10, "container robustness", ok,
            f"bitwise fails {bitwise_fail}, crash fails {crash_fail}")
