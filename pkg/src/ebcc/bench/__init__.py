"""Benchmark harness: synthetic fields, quality metrics, flow diagnostics,
and the suite runner."""

from .fields import SyntheticFieldSpec, make_field, rotation_wind, vortex_wind
from .metrics import (
    MetricReport,
    error_histogram,
    metric_report,
    midtread_quantize,
    quantizer_ratio,
    radial_power_spectrum,
    ssim,
)
from .flow import advect_particles, horizontal_divergence, particle_density_rmse
from .suites import run_suite

__all__ = [
    "SyntheticFieldSpec",
    "make_field",
    "vortex_wind",
    "rotation_wind",
    "MetricReport",
    "ssim",
    "error_histogram",
    "radial_power_spectrum",
    "metric_report",
    "midtread_quantize",
    "quantizer_ratio",
    "horizontal_divergence",
    "advect_particles",
    "particle_density_rmse",
    "run_suite",
]
