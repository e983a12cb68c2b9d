"""Benchmark suite runner.

Each suite sweeps the error-target grid 0.1%..10% (and, for the ablation,
the base-quantile grid) over deterministic synthetic fields, then writes
one CSV and one JSON file with identical rows:

  suite, field_kind, seed, q, epsilon_rel, ratio, rel_max, rmse, ssim

Ratios are measured on complete container files, so they include all
format overhead.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from ..container import write_bytes
from ..core import error_stats, grid_from_array
from ..errors import ArgumentError
from ..pipeline import EbccParams, compress_grid, decompress_grid
from .fields import SyntheticFieldSpec, make_field, rotation_wind, vortex_wind
from .flow import advect_particles, horizontal_divergence, particle_density_rmse
from .metrics import ssim

EPS_GRID = (0.001, 0.005, 0.01, 0.05, 0.10)
Q_GRID = (1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 1e-6, 1.0)

COLUMNS = ("suite", "field_kind", "seed", "q", "epsilon_rel", "ratio",
           "rel_max", "rmse", "ssim")


def compress_field(field: np.ndarray, epsilon_rel: float, q: float):
    """Compress one 2D field as a single-chunk grid.

    Returns (reconstruction, container_bytes).
    """
    grid = grid_from_array(field)
    chunks = compress_grid(grid, EbccParams(epsilon_rel=epsilon_rel, q=q))
    blob = write_bytes(chunks, grid.dims, grid.chunk_shape)
    rec = decompress_grid(chunks, grid.dims)[0, 0]
    return rec, len(blob)


def _row(suite, kind, seed, q, eps, ratio, rel_max, rmse, ssim_value):
    return {
        "suite": suite, "field_kind": kind, "seed": seed, "q": q,
        "epsilon_rel": eps, "ratio": ratio, "rel_max": rel_max,
        "rmse": rmse, "ssim": ssim_value,
    }


def _suite_stats(rows, cols, seeds):
    out = []
    for kind in ("smooth-fourier", "vortex", "spiky"):
        for seed in range(seeds):
            field = make_field(SyntheticFieldSpec(kind, rows, cols, seed))
            for eps in EPS_GRID:
                rec, nbytes = compress_field(field, eps, 1 - 1e-5)
                st = error_stats(field, rec)
                out.append(_row("stats", kind, seed, 1 - 1e-5, eps,
                                field.nbytes / nbytes, st.rel_max, st.rmse,
                                ssim(field, rec)))
    return out


def _suite_ablation(rows, cols, seeds):
    out = []
    for seed in range(seeds):
        field = make_field(SyntheticFieldSpec("spiky", rows, cols, seed))
        for eps in EPS_GRID:
            for q in Q_GRID:
                rec, nbytes = compress_field(field, eps, q)
                st = error_stats(field, rec)
                out.append(_row("ablation", "spiky", seed, q, eps,
                                field.nbytes / nbytes, st.rel_max, st.rmse,
                                ssim(field, rec)))
    return out


def _suite_divergence(rows, cols, seeds):
    out = []
    for seed in range(seeds):
        u, v = vortex_wind(rows, cols, seed)
        div0 = horizontal_divergence(u, v, 1.0, 1.0)
        for eps in EPS_GRID:
            ru, nu = compress_field(u, eps, 1 - 1e-5)
            rv, nv = compress_field(v, eps, 1 - 1e-5)
            div = horizontal_divergence(ru, rv, 1.0, 1.0)
            derr = div - div0
            rel_max = max(error_stats(u, ru).rel_max, error_stats(v, rv).rel_max)
            out.append(_row("divergence", "vortex", seed, 1 - 1e-5, eps,
                            (u.nbytes + v.nbytes) / (nu + nv), rel_max,
                            float(np.sqrt(np.mean(derr ** 2))),
                            ssim(div0, div)))
    return out


def trajectory_scenarios(rows, cols, seed):
    """Synthetic wind scenarios for the trajectory suite."""
    rng = np.random.default_rng(seed)
    # steady solid-body rotation, orbit well inside the domain
    ur, vr = rotation_wind(rows, cols, omega=1.0)
    # unsteady vortex with a drifting smooth background
    frames = []
    for k in range(5):
        u, v = vortex_wind(rows, cols, seed * 13 + k, background=0.25)
        frames.append((u, v))
    return {
        "rotation": ([ur], [vr]),
        "vortex": ([f[0] for f in frames], [f[1] for f in frames]),
    }


def _seed_particles(rows, cols, count, rng):
    x = rng.uniform(cols * 0.2, cols * 0.8, count)
    y = rng.uniform(rows * 0.2, rows * 0.8, count)
    return np.column_stack([x, y])


def run_trajectory_case(u_series, v_series, eps, q, rows, cols, seeds_xy,
                        dt, steps):
    """Advect the same particles through original and compressed winds.

    Returns (mean density RMSE across steps, combined ratio, max rel_max,
    mean ssim over compressed fields).
    """
    comp_u, comp_v = [], []
    total_raw = total_comp = 0
    rel_max = 0.0
    ssims = []
    for u, v in zip(u_series, v_series):
        ru, nu = compress_field(u, eps, q)
        rv, nv = compress_field(v, eps, q)
        comp_u.append(ru)
        comp_v.append(rv)
        total_raw += u.nbytes + v.nbytes
        total_comp += nu + nv
        rel_max = max(rel_max, error_stats(u, ru).rel_max, error_stats(v, rv).rel_max)
        ssims.append(ssim(u, ru))
    ref = advect_particles(u_series, v_series, seeds_xy, dt, steps)
    cmp_ = advect_particles(comp_u, comp_v, seeds_xy, dt, steps)
    dens = particle_density_rmse(ref, cmp_, (16, 16), (cols, rows))
    return float(dens.mean()), total_raw / total_comp, rel_max, float(np.mean(ssims))


def _suite_trajectory(rows, cols, seeds):
    out = []
    dt, steps = 0.04, 50
    for seed in range(seeds):
        rng = np.random.default_rng(seed + 77)
        seeds_xy = _seed_particles(rows, cols, 1500, rng)
        for name, (us, vs) in trajectory_scenarios(rows, cols, seed).items():
            for eps in EPS_GRID:
                dens, ratio, rel_max, mean_ssim = run_trajectory_case(
                    us, vs, eps, 1 - 1e-5, rows, cols, seeds_xy, dt, steps)
                out.append(_row("trajectory", name, seed, 1 - 1e-5, eps,
                                ratio, rel_max, dens, mean_ssim))
    return out


_SUITES = {
    "stats": (_suite_stats, dict(rows=96, cols=96, seeds=2)),
    "ablation": (_suite_ablation, dict(rows=128, cols=128, seeds=2)),
    "divergence": (_suite_divergence, dict(rows=96, cols=96, seeds=2)),
    "trajectory": (_suite_trajectory, dict(rows=64, cols=64, seeds=1)),
}


def run_suite(name: str, out_dir: str, rows=None, cols=None, seeds=None):
    """Run one suite and write <name>.csv and <name>.json into out_dir."""
    if name not in _SUITES:
        raise ArgumentError(f"unknown suite {name!r}; choose from {sorted(_SUITES)}")
    fn, defaults = _SUITES[name]
    kwargs = dict(defaults)
    for key, value in (("rows", rows), ("cols", cols), ("seeds", seeds)):
        if value is not None:
            kwargs[key] = int(value)
    rows_out = fn(**kwargs)

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    json_path = os.path.join(out_dir, f"{name}.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        writer.writerows(rows_out)
    with open(json_path, "w") as fh:
        json.dump(rows_out, fh, indent=1)
    return [csv_path, json_path]
