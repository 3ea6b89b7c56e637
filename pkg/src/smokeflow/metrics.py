"""Quantitative flow metrics: interpolation error, endpoint error, angular error.

The interpolation error works without ground truth: warp the first frame by
the estimated flow and compare against the real second frame (RMS intensity
difference on [0, 1]).  With frame-1-anchored forward flow the prediction is
approximated by backward-sampling f1 with the negated field, which is exact
for constant flows and below the bilinear resampling floor for the smooth
flows used in testing.
"""

from __future__ import annotations

import numpy as np

from .imaging import warp_backward


def _region_values(a: np.ndarray, region: np.ndarray | None) -> np.ndarray:
    if region is None:
        return a.reshape(-1)
    region = np.asarray(region, dtype=bool)
    if region.shape != a.shape:
        raise ValueError("region dimensions must match")
    vals = a[region]
    if vals.size == 0:
        raise ValueError("empty region")
    return vals


def interpolation_error(f1, f2, flow, region=None) -> float:
    """RMS difference between the flow-warped first frame and the second frame."""
    if f1.shape != f2.shape or flow.shape[:2] != f1.shape:
        raise ValueError("frame and flow dimensions must match")
    predicted = warp_backward(f1, -flow)
    diff = _region_values(predicted - f2, region)
    return float(np.sqrt(np.mean(diff**2)))


def endpoint_error(flow, gt, region=None) -> tuple[float, float]:
    """Mean and max per-pixel Euclidean distance between flow and ground truth."""
    if flow.shape != gt.shape:
        raise ValueError("flow dimensions must match")
    ee = np.hypot(flow[..., 0] - gt[..., 0], flow[..., 1] - gt[..., 1])
    vals = _region_values(ee, region)
    return float(vals.mean()), float(vals.max())


def angular_error(flow, gt, region=None) -> float:
    """Mean angular error (radians) via the 3-vector formulation.

    AE = acos((u u' + v v' + 1) / (sqrt(u^2 + v^2 + 1) sqrt(u'^2 + v'^2 + 1)))
    per pixel, clamped into the acos domain.  Not scale-invariant.
    """
    if flow.shape != gt.shape:
        raise ValueError("flow dimensions must match")
    u, v = flow[..., 0], flow[..., 1]
    gu, gv = gt[..., 0], gt[..., 1]
    num = u * gu + v * gv + 1.0
    den = np.sqrt(u**2 + v**2 + 1.0) * np.sqrt(gu**2 + gv**2 + 1.0)
    ae = np.arccos(np.clip(num / den, -1.0, 1.0))
    return float(_region_values(ae, region).mean())
