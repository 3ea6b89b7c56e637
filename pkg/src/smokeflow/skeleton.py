"""Multi-scale ridge skeletons of smoke density.

A per-scale skeleton marks pixels that are strict local intensity maxima
along the x or y axis of the blurred frame.  Averaging the binary maps over
all blur scales yields a per-pixel stability value in {0, 1/N, ..., 1};
pixels with positive stability form the skeletal point set, each carrying a
local tangent/normal frame estimated from the skeleton's shape around it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from .imaging import gaussian_blur

DEFAULT_SCALES = (2.0, 4.0, 8.0, 16.0, 32.0)
FRAME_RADIUS = 5
# Scatter eigenvalue ratio under which a neighborhood counts as isotropic.
_ISO_RATIO = 1.05


@dataclass(frozen=True)
class MultiScaleSkeleton:
    """Compound skeleton: stability grid plus extracted points with local frames.

    Attributes
    ----------
    stability : (H, W) float array with values on the lattice {0, 1/N, ..., 1}
    positions : (n, 2) int array of point coordinates as (x, y)
    stabilities : (n,) stability of each point
    tangents, normals : (n, 2) orthonormal local frames
    """

    stability: np.ndarray
    positions: np.ndarray
    stabilities: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray

    @property
    def shape(self):
        return self.stability.shape

    def __len__(self):
        return len(self.positions)


def check_scales(scales) -> tuple[float, ...]:
    """Validate a blur-scale set: at least two positive, strictly increasing values."""
    s = tuple(float(x) for x in scales)
    if len(s) < 2:
        raise ValueError("need at least two scales")
    if any(x <= 0 for x in s):
        raise ValueError("scales must be positive")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ValueError("scales must be strictly increasing")
    return s


def detect_ridges(g: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mark pixels that are strict local maxima of ``g`` along x or y, inside ``mask``.

    A border pixel lacks two neighbors along one axis and can only qualify
    through the other axis.  Ties never produce a ridge.
    """
    if g.shape != mask.shape:
        raise ValueError("frame and mask dimensions must match")
    rx = np.zeros(g.shape, dtype=bool)
    ry = np.zeros(g.shape, dtype=bool)
    rx[:, 1:-1] = (g[:, 1:-1] > g[:, :-2]) & (g[:, 1:-1] > g[:, 2:])
    ry[1:-1, :] = (g[1:-1, :] > g[:-2, :]) & (g[1:-1, :] > g[2:, :])
    return mask & (rx | ry)


def _principal_axis(sxx, sxy, syy, count):
    """Unit principal eigenvector of 2x2 scatter matrices, with degeneracy fallback.

    Inputs may be scalars or arrays.  Falls back to (1, 0) when fewer than two
    skeleton pixels contribute or the scatter is near-isotropic.  The sign is
    canonical: x-component positive, or y positive when x is zero.
    """
    sxx = np.asarray(sxx, dtype=np.float64)
    sxy = np.asarray(sxy, dtype=np.float64)
    syy = np.asarray(syy, dtype=np.float64)
    count = np.asarray(count)
    half_tr = 0.5 * (sxx + syy)
    rad = np.sqrt((0.5 * (sxx - syy)) ** 2 + sxy**2)
    lmax = half_tr + rad
    lmin = half_tr - rad
    off_diag = np.abs(sxy) > 1e-12
    tx = np.where(off_diag, sxy, np.where(sxx >= syy, 1.0, 0.0))
    ty = np.where(off_diag, lmax - sxx, np.where(sxx >= syy, 0.0, 1.0))
    nrm = np.hypot(tx, ty)
    nrm = np.where(nrm == 0, 1.0, nrm)
    tx, ty = tx / nrm, ty / nrm
    degenerate = (count < 2) | (lmax <= 1e-12) | (lmax < _ISO_RATIO * np.maximum(lmin, 0.0))
    tx = np.where(degenerate, 1.0, tx)
    ty = np.where(degenerate, 0.0, ty)
    flip = (tx < 0) | ((tx == 0) & (ty < 0))
    tx = np.where(flip, -tx, tx)
    ty = np.where(flip, -ty, ty)
    return tx, ty


def _disc_offsets(radius: int):
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    keep = xs**2 + ys**2 <= radius * radius
    return xs[keep], ys[keep]


def estimate_frames(ridge: np.ndarray, x: int, y: int, radius: int = FRAME_RADIUS):
    """Local (tangent, normal) at ridge pixel (x, y).

    The tangent is the principal axis of the scatter matrix of ridge-pixel
    offsets within ``radius`` of the point; the normal is the tangent rotated
    by +90 degrees.  Degenerate neighborhoods default to tangent (1, 0).
    """
    if not ridge[y, x]:
        raise ValueError("(x, y) is not a ridge pixel")
    h, w = ridge.shape
    xs, ys = _disc_offsets(radius)
    px, py = x + xs, y + ys
    ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    px, py = px[ok], py[ok]
    on = ridge[py, px]
    dx = (px[on] - x).astype(np.float64)
    dy = (py[on] - y).astype(np.float64)
    tx, ty = _principal_axis((dx * dx).sum(), (dx * dy).sum(), (dy * dy).sum(), on.sum())
    tangent = np.array([float(tx), float(ty)])
    normal = np.array([-tangent[1], tangent[0]])
    return tangent, normal


def _frames_for_support(support: np.ndarray, radius: int = FRAME_RADIUS):
    """Vectorized tangent/normal maps over a ridge support mask.

    Computes the same scatter matrices as :func:`estimate_frames` for every
    pixel at once via convolution (zero padding excludes out-of-image pixels,
    matching the per-point loop).
    """
    xs, ys = _disc_offsets(radius)
    m = support.astype(np.float64)

    def weighted_count(wts):
        k = np.zeros((2 * radius + 1, 2 * radius + 1))
        k[ys + radius, xs + radius] = wts
        # the kernels are even in the offsets, so convolve == correlate
        return convolve(m, k, mode="constant", cval=0.0)

    sxx = weighted_count(xs.astype(np.float64) ** 2)
    sxy = weighted_count((xs * ys).astype(np.float64))
    syy = weighted_count(ys.astype(np.float64) ** 2)
    cnt = weighted_count(np.ones(len(xs)))
    tx, ty = _principal_axis(sxx, sxy, syy, np.round(cnt))
    return tx, ty, -ty, tx  # tangent x/y, normal x/y


def build_skeleton(
    f: np.ndarray,
    mask: np.ndarray,
    scales=DEFAULT_SCALES,
    frame_radius: int = FRAME_RADIUS,
) -> MultiScaleSkeleton:
    """Aggregate per-scale ridge skeletons into a multi-valued skeleton.

    For each blur scale the masked ridge map is computed; the stability grid
    is the mean of the binary maps.  Points are extracted wherever stability
    is positive, in row-major order, with tangent/normal frames estimated on
    the union support.  An empty mask yields an empty (but valid) skeleton.
    """
    scales = check_scales(scales)
    acc = np.zeros(f.shape, dtype=np.float64)
    for s in scales:
        acc += detect_ridges(gaussian_blur(f, s), mask)
    stability = acc / len(scales)
    support = stability > 0
    rows, cols = np.nonzero(support)
    if len(rows) == 0:
        empty2 = np.zeros((0, 2))
        return MultiScaleSkeleton(
            stability, np.zeros((0, 2), dtype=np.int64), np.zeros(0), empty2, empty2
        )
    tx, ty, nx, ny = _frames_for_support(support, frame_radius)
    positions = np.stack([cols, rows], axis=1).astype(np.int64)
    return MultiScaleSkeleton(
        stability=stability,
        positions=positions,
        stabilities=stability[rows, cols],
        tangents=np.stack([tx[rows, cols], ty[rows, cols]], axis=1),
        normals=np.stack([nx[rows, cols], ny[rows, cols]], axis=1),
    )
