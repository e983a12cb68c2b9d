"""Flow diagnostics: derived divergence and a toy Lagrangian particle tracer.

The tracer integrates particle positions through a time sequence of wind
fields with fourth-order Runge-Kutta steps, bilinear interpolation in space
and linear interpolation in time.  The x axis is periodic, y is clamped at
the field edges.  Positions are in grid units (x along columns).
"""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError, SimulationError


def horizontal_divergence(u: np.ndarray, v: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """du/dx + dv/dy on a uniform grid.

    Second-order central differences inside, second-order one-sided stencils
    at the edges (x along columns, y along rows).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ArgumentError(f"shape mismatch: {u.shape} vs {v.shape}")
    dudx = np.gradient(u, dx, axis=1, edge_order=2)
    dvdy = np.gradient(v, dy, axis=0, edge_order=2)
    return dudx + dvdy


def _bilinear(field: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    rows, cols = field.shape
    with np.errstate(invalid="ignore"):  # non-finite fields surface downstream
        xw = np.mod(x, cols)
        ix = np.clip(np.nan_to_num(np.floor(xw)), 0, cols - 1).astype(np.int64)
        fx = xw - ix
        ix1 = (ix + 1) % cols
        yc = np.clip(y, 0.0, rows - 1.0)
        iy = (np.minimum(np.nan_to_num(np.floor(yc)), rows - 2).astype(np.int64)
              if rows > 1 else np.zeros_like(ix))
        fy = yc - iy
        f00 = field[iy, ix]
        f01 = field[iy, ix1]
        f10 = field[iy + 1, ix] if rows > 1 else f00
        f11 = field[iy + 1, ix1] if rows > 1 else f01
        top = f00 * (1 - fx) + f01 * fx
        bot = f10 * (1 - fx) + f11 * fx
        return top * (1 - fy) + bot * fy


class _WindSampler:
    """Linear-in-time, bilinear-in-space sampler over a field sequence."""

    def __init__(self, u_series, v_series, field_dt):
        self.u = [np.asarray(f, dtype=np.float64) for f in u_series]
        self.v = [np.asarray(f, dtype=np.float64) for f in v_series]
        if len(self.u) != len(self.v) or not self.u:
            raise ArgumentError("u and v series must be non-empty and equal length")
        shape = self.u[0].shape
        if any(f.shape != shape for f in self.u + self.v):
            raise ArgumentError("all wind fields must share one shape")
        self.shape = shape
        self.field_dt = float(field_dt)
        self.t_end = (len(self.u) - 1) * self.field_dt

    def sample(self, t, x, y):
        if len(self.u) == 1:
            return _bilinear(self.u[0], x, y), _bilinear(self.v[0], x, y)
        tc = min(max(t, 0.0), self.t_end)
        k = min(int(tc / self.field_dt), len(self.u) - 2)
        w = (tc - k * self.field_dt) / self.field_dt
        u = (1 - w) * _bilinear(self.u[k], x, y) + w * _bilinear(self.u[k + 1], x, y)
        v = (1 - w) * _bilinear(self.v[k], x, y) + w * _bilinear(self.v[k + 1], x, y)
        return u, v


def advect_particles(u_series, v_series, seeds, dt: float, steps: int,
                     field_dt: float | None = None) -> np.ndarray:
    """Trace particles through the wind sequence.

    ``seeds`` is (n, 2) of (x, y) positions.  Returns a (steps + 1, n, 2)
    trajectory array.  Fields are sampled at times k * field_dt (default:
    the series spans the whole integration).
    """
    seeds = np.asarray(seeds, dtype=np.float64)
    if seeds.ndim != 2 or seeds.shape[1] != 2:
        raise ArgumentError("seeds must be an (n, 2) array of x, y positions")
    if steps < 1 or dt <= 0:
        raise ArgumentError("need steps >= 1 and dt > 0")
    n_fields = len(u_series)
    if field_dt is None:
        field_dt = steps * dt / max(n_fields - 1, 1)
    sampler = _WindSampler(u_series, v_series, field_dt)

    out = np.empty((steps + 1, seeds.shape[0], 2), dtype=np.float64)
    out[0] = seeds
    x = seeds[:, 0].copy()
    y = seeds[:, 1].copy()
    rows = sampler.shape[0]

    def stage(t, px, py, step_idx):
        u, v = sampler.sample(t, px, py)
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise SimulationError("non-finite wind sample", step=step_idx)
        return u, v

    for k in range(steps):
        t = k * dt
        u1, v1 = stage(t, x, y, k + 1)
        u2, v2 = stage(t + dt / 2, x + dt / 2 * u1, y + dt / 2 * v1, k + 1)
        u3, v3 = stage(t + dt / 2, x + dt / 2 * u2, y + dt / 2 * v2, k + 1)
        u4, v4 = stage(t + dt, x + dt * u3, y + dt * v3, k + 1)
        x = x + dt / 6.0 * (u1 + 2 * u2 + 2 * u3 + u4)
        y = y + dt / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4)
        y = np.clip(y, 0.0, rows - 1.0)
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise SimulationError("non-finite particle position", step=k + 1)
        out[k + 1, :, 0] = x
        out[k + 1, :, 1] = y
    return out


def particle_density_rmse(traj_a: np.ndarray, traj_b: np.ndarray,
                          grid_bins: tuple, domain: tuple) -> np.ndarray:
    """Per-step RMSE between normalized particle density histograms.

    ``grid_bins`` is (nx, ny); ``domain`` is (width, height) in grid units.
    """
    a = np.asarray(traj_a, dtype=np.float64)
    b = np.asarray(traj_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"trajectory shape mismatch: {a.shape} vs {b.shape}")
    nx, ny = grid_bins
    width, height = domain
    xe = np.linspace(0.0, width, nx + 1)
    ye = np.linspace(0.0, height, ny + 1)
    out = np.empty(a.shape[0])
    for k in range(a.shape[0]):
        ha, _, _ = np.histogram2d(np.mod(a[k, :, 0], width), a[k, :, 1], bins=(xe, ye))
        hb, _, _ = np.histogram2d(np.mod(b[k, :, 0], width), b[k, :, 1], bins=(xe, ye))
        ha /= max(ha.sum(), 1.0)
        hb /= max(hb.sum(), 1.0)
        out[k] = np.sqrt(np.mean((ha - hb) ** 2))
    return out
