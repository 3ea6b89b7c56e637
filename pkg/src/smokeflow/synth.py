"""Synthetic smoke-like frame pairs with analytic ground-truth flow.

The real smoke footage the method targets is not publicly available, so this
module is the verification oracle: densities built from random anisotropic
Gaussian blobs modulated by multi-octave band-limited noise, advected by
parametric flows (translation, rotation, vortex, shear) whose displacement
fields have closed forms.  The second frame is produced by semi-Lagrangian
backward sampling along the exact inverse map, optionally followed by a
Gaussian diffusion step, and the stored ground truth is the forward
displacement anchored at frame-1 pixels (the estimator's convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .imaging import gaussian_blur

KINDS = ("translate", "rotate", "vortex", "shear")

# Multi-octave noise: (blur scale, relative amplitude).  Coarse octaves give
# the refinement stage pull-in range, fine octaves give it precision.
_NOISE_OCTAVES = ((2.0, 0.25), (4.0, 0.5), (8.0, 1.0), (16.0, 2.0), (32.0, 3.0))
_MARGIN = 8  # guaranteed dark border, px
_TAPER = 16  # ramp width from dark margin to full intensity, px


@dataclass(frozen=True)
class FlowSpec:
    """Parametric motion: kind plus per-kind parameters.

    translate : (tx, ty) pixels per step
    rotate    : ``angle`` radians per step about ``center``
    vortex    : rotation by strength*exp(-r^2 / (2 radius^2)) about ``center``
    shear     : horizontal slip ``rate`` * (y - cy) per step

    ``diffusion`` is a Gaussian blur sigma applied after each advection step.
    ``center`` defaults to the image center.
    """

    kind: str
    tx: float = 0.0
    ty: float = 0.0
    angle: float = 0.0
    strength: float = 0.0
    radius: float = 1.0
    rate: float = 0.0
    center: tuple[float, float] | None = None
    diffusion: float = 0.0
    steps: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.diffusion < 0:
            raise ValueError("diffusion must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.kind == "vortex" and self.radius <= 0:
            raise ValueError("vortex radius must be positive")
        for name in ("tx", "ty", "angle", "strength", "rate"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def resolved_center(self, shape) -> tuple[float, float]:
        if self.center is not None:
            return (float(self.center[0]), float(self.center[1]))
        h, w = shape
        return ((w - 1) / 2.0, (h - 1) / 2.0)

    def descriptor(self, shape) -> dict:
        cx, cy = self.resolved_center(shape)
        return {
            "kind": self.kind,
            "tx": self.tx, "ty": self.ty, "angle": self.angle,
            "strength": self.strength, "radius": self.radius, "rate": self.rate,
            "center": [cx, cy], "diffusion": self.diffusion, "steps": self.steps,
        }


@dataclass(frozen=True)
class SynthCase:
    """Generated frame pair with its analytic ground truth."""

    f1: np.ndarray
    f2: np.ndarray
    gt: np.ndarray
    descriptor: dict = field(default_factory=dict)


def make_density(width: int, height: int, seed: int, blobs: int = 5,
                 noise_amp: float = 0.4) -> np.ndarray:
    """Random smoke-like density: Gaussian blobs plus band-limited noise.

    Blob centers scatter over the middle of the frame (a single blob is
    centered, which gives a deterministic calibration pattern); the noise is
    a normalized sum of blurred white-noise octaves modulating the blob
    envelope.  The result peaks at 0.95 and is exactly zero within an 8 px
    border margin.  Deterministic for a given seed.
    """
    if blobs < 1:
        raise ValueError("blobs must be >= 1")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    f = np.zeros((height, width))
    for k in range(blobs):
        cx = rng.uniform(0.2 * width, 0.8 * width)
        cy = rng.uniform(0.2 * height, 0.8 * height)
        if blobs == 1:
            cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
        a1 = rng.uniform(0.10, 0.25) * min(width, height)
        a2 = rng.uniform(0.10, 0.25) * min(width, height)
        theta = rng.uniform(0.0, np.pi)
        amp = rng.uniform(0.5, 1.0)
        dx = xx - cx
        dy = yy - cy
        along = np.cos(theta) * dx + np.sin(theta) * dy
        across = -np.sin(theta) * dx + np.cos(theta) * dy
        f += amp * np.exp(-0.5 * ((along / a1) ** 2 + (across / a2) ** 2))
    if noise_amp > 0:
        noise = np.zeros((height, width))
        for sig, amp in _NOISE_OCTAVES:
            layer = gaussian_blur(rng.normal(0.0, 1.0, (height, width)), sig)
            noise += amp * layer / np.abs(layer).max()
        noise /= np.abs(noise).max()
        f = f * (1.0 + noise_amp * noise)
    f = f / f.max() * 0.95
    rows = np.minimum(np.arange(height), height - 1 - np.arange(height)).astype(np.float64)
    cols = np.minimum(np.arange(width), width - 1 - np.arange(width)).astype(np.float64)
    ramp = np.minimum.outer(rows, cols)
    taper = np.clip((ramp - _MARGIN) / _TAPER, 0.0, 1.0)
    return np.clip(f * taper, 0.0, 1.0)


def _per_step_maps(spec: FlowSpec, shape, steps: float):
    """Forward displacement after ``steps`` applications, and the matching grid.

    All supported kinds compose cleanly: translations add, rotation angles
    add, vortex rotation preserves radius so its per-radius angles add, and
    shear rates add.
    """
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = spec.resolved_center(shape)
    dx = xx - cx
    dy = yy - cy
    if spec.kind == "translate":
        fx = np.full((h, w), spec.tx * steps)
        fy = np.full((h, w), spec.ty * steps)
        return fx, fy
    if spec.kind == "shear":
        return spec.rate * steps * dy, np.zeros((h, w))
    if spec.kind == "rotate":
        ang = np.full((h, w), spec.angle * steps)
    else:  # vortex
        ang = spec.strength * steps * np.exp(-(dx * dx + dy * dy) / (2.0 * spec.radius**2))
    ca, sa = np.cos(ang), np.sin(ang)
    return ca * dx - sa * dy - dx, sa * dx + ca * dy - dy


def displacement_field(spec: FlowSpec, shape) -> np.ndarray:
    """Total forward displacement per pixel, (H, W, 2), evaluated analytically."""
    fx, fy = _per_step_maps(spec, shape, float(spec.steps))
    return np.stack([fx, fy], axis=-1)


def _inverse_coords(spec: FlowSpec, shape):
    """Sampling coordinates of the inverse one-step map (rows, cols)."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    # the inverse of each kind is the same kind with negated parameters
    fx, fy = _per_step_maps(spec, shape, -1.0)
    return yy + fy, xx + fx


def advect(f: np.ndarray, spec: FlowSpec) -> SynthCase:
    """Advect a density along the flow spec and package the pair with ground truth.

    Each step backward-samples the current frame along the exact inverse map
    (semi-Lagrangian, bilinear) and then applies the diffusion blur.  Raises
    "flow too large" when the displacement exceeds the image size everywhere.
    """
    gt = displacement_field(spec, f.shape)
    mag = np.hypot(gt[..., 0], gt[..., 1])
    if mag.min() > max(f.shape):
        raise ValueError("flow too large")
    rows, cols = _inverse_coords(spec, f.shape)
    f2 = f.copy()
    for _ in range(spec.steps):
        f2 = map_coordinates(f2, [rows, cols], order=1, mode="nearest")
        if spec.diffusion > 0:
            f2 = gaussian_blur(f2, spec.diffusion)
    return SynthCase(f1=f, f2=np.clip(f2, 0.0, 1.0), gt=gt,
                     descriptor=spec.descriptor(f.shape))
