"""Raster basics shared by every pipeline stage.

Frames are 2D float64 arrays with intensities in [0, 1] (x grows along
columns, y along rows).  Flow fields are (H, W, 2) arrays holding the
(u, v) displacement per pixel, u horizontal and v vertical.  Masks are
boolean arrays of the frame shape.
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy.ndimage import convolve1d, map_coordinates

# Rec. 601 luma weights used when collapsing RGB input to intensity.
_LUMA = (0.299, 0.587, 0.114)


def as_frame(a) -> np.ndarray:
    """Validate and convert an array to a frame (float64, 2D, values in [0, 1])."""
    f = np.asarray(a, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
        raise ValueError("frame must be a non-empty 2D array")
    if not np.all(np.isfinite(f)):
        raise ValueError("frame contains non-finite values")
    if f.min() < 0.0 or f.max() > 1.0:
        raise ValueError("frame intensities must lie in [0, 1]")
    return np.ascontiguousarray(f)


def as_flow(a) -> np.ndarray:
    """Validate and convert an array to a flow field (float64, H x W x 2)."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 3 or v.shape[2] != 2:
        raise ValueError("flow must have shape (H, W, 2)")
    if not np.all(np.isfinite(v)):
        raise ValueError("flow contains non-finite values")
    return np.ascontiguousarray(v)


def read_image(path) -> np.ndarray:
    """Read a PNG (8/16-bit gray or RGB) or PGM (P2/P5) file as a frame.

    8-bit data maps 0..255 to 0..1, 16-bit data 0..65535 to 0..1.  RGB is
    reduced to luminance first.
    """
    with Image.open(path) as im:
        mode = im.mode
        arr = np.asarray(im)
    if arr.ndim == 3:  # RGB / RGBA
        rgb = arr[..., :3].astype(np.float64)
        gray = _LUMA[0] * rgb[..., 0] + _LUMA[1] * rgb[..., 1] + _LUMA[2] * rgb[..., 2]
        scale = 65535.0 if arr.dtype == np.uint16 else 255.0
        return as_frame(np.clip(gray / scale, 0.0, 1.0))
    sixteen_bit = mode.startswith("I") or arr.dtype.itemsize > 1
    scale = 65535.0 if sixteen_bit else 255.0
    return as_frame(np.clip(arr.astype(np.float64) / scale, 0.0, 1.0))


def write_png(img, path) -> None:
    """Write a frame (2D) or an RGB image (H x W x 3), both in [0, 1], as 8-bit PNG."""
    a = np.asarray(img, dtype=np.float64)
    data = np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
    if data.ndim == 2:
        Image.fromarray(data, mode="L").save(path)
    elif data.ndim == 3 and data.shape[2] == 3:
        Image.fromarray(data, mode="RGB").save(path)
    else:
        raise ValueError("expected a 2D frame or an (H, W, 3) RGB image")


def threshold_mask(f: np.ndarray, epsilon: float = 1.0) -> np.ndarray:
    """Segment smoke from a dark background: mask = intensity * 255 > epsilon.

    ``epsilon`` is expressed on the 8-bit scale; the default of 1 keeps
    everything brighter than one gray level.
    """
    if not 0.0 <= epsilon <= 255.0:
        raise ValueError("epsilon must be in [0, 255]")
    return f * 255.0 > epsilon


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 1D Gaussian, truncated at radius ceil(3*sigma), normalized to sum 1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = int(np.ceil(3.0 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(f: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge replication at the borders."""
    k = gaussian_kernel(sigma)
    out = convolve1d(f, k, axis=0, mode="nearest")
    return convolve1d(out, k, axis=1, mode="nearest")


def gradient(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spatial gradient (df/dx, df/dy): central differences, one-sided at borders."""
    if f.shape[0] < 2 or f.shape[1] < 2:
        raise ValueError("gradient needs at least a 2x2 frame")
    gy, gx = np.gradient(f)
    return gx, gy


def warp_backward(f: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Sample ``f`` at x + flow(x) with bilinear interpolation.

    Samples falling outside the image clamp to the nearest border pixel, so
    the result is complete and stays within the input value range.
    """
    if flow.shape[:2] != f.shape:
        raise ValueError("flow dimensions must match the frame")
    h, w = f.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return map_coordinates(
        f, [yy + flow[..., 1], xx + flow[..., 0]], order=1, mode="nearest"
    )
