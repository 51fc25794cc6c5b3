"""Uncertainty-aware monocular depth on synthetic colonoscopy scenes."""

from ._udepth import (
    calibration,
    depth_metrics,
    fit,
    fit_scene,
    fuse,
    normal_quantile,
    regimes,
    render,
    ssim,
)

__all__ = [
    "calibration",
    "depth_metrics",
    "fit",
    "fit_scene",
    "fuse",
    "normal_quantile",
    "regimes",
    "render",
    "ssim",
]
