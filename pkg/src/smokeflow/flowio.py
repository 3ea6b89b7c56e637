"""Flow-field persistence (Middlebury .flo) and color-wheel visualization."""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"PIEH"  # equals the little-endian float32 202021.25


def write_flo(flow: np.ndarray, path) -> None:
    """Write a flow field as a .flo file.

    Layout: 4 magic bytes, width and height as little-endian int32, then
    row-major interleaved (u, v) little-endian float32 samples.  Values are
    stored as float32; non-finite values are rejected.
    """
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError("flow must have shape (H, W, 2)")
    if not np.all(np.isfinite(flow)):
        raise ValueError("flow contains non-finite values")
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<ii", w, h))
        fh.write(flow.astype("<f4", copy=False).tobytes(order="C"))


def read_flo(path) -> np.ndarray:
    """Read a .flo file into an (H, W, 2) float32 array.

    Raises ValueError("not a flo file") on a bad magic tag and
    ValueError("corrupt flo") on a truncated or malformed payload.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != MAGIC:
        raise ValueError("not a flo file")
    w, h = struct.unpack("<ii", data[4:12])
    if w <= 0 or h <= 0:
        raise ValueError("corrupt flo")
    expected = 12 + 8 * w * h
    if len(data) != expected:
        raise ValueError("corrupt flo")
    payload = np.frombuffer(data, dtype="<f4", offset=12)
    return payload.reshape(h, w, 2).copy()


def colorize(flow: np.ndarray, max_mag: float | None = None) -> np.ndarray:
    """Render a flow field with the standard color wheel, returning RGB in [0, 1].

    Hue encodes the flow direction atan2(v, u); saturation grows with
    magnitude relative to ``max_mag`` (clamped at 1) at full value, so zero
    flow maps to white.  ``max_mag=None`` uses the 99th-percentile magnitude.
    """
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError("flow must have shape (H, W, 2)")
    mag = np.hypot(flow[..., 0], flow[..., 1])
    if max_mag is None:
        max_mag = float(np.percentile(mag, 99.0))
        if max_mag <= 0:
            max_mag = 1.0
    elif max_mag <= 0:
        raise ValueError("max_mag must be positive")
    hue = (np.arctan2(flow[..., 1], flow[..., 0]) / (2.0 * np.pi)) % 1.0
    sat = np.clip(mag / max_mag, 0.0, 1.0)
    return _hsv_to_rgb(hue, sat, np.ones_like(hue))


def _hsv_to_rgb(h, s, v):
    """Vectorized HSV -> RGB for arrays in [0, 1]."""
    sector = np.floor(h * 6.0) % 6.0
    frac = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))
    r = np.choose(sector.astype(int), [v, q, p, p, t, v])
    g = np.choose(sector.astype(int), [t, v, v, q, p, p])
    b = np.choose(sector.astype(int), [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)
