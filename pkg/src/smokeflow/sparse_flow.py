"""Sparse motion from skeletal attraction.

Every frame-1 skeletal point is mapped to the probability-weighted mean of
frame-2 skeletal points.  The weight of a candidate combines an anisotropic
spatial Gaussian oriented by the candidate's local frame (narrowed along the
skeleton tangent so attraction stays flat along skeleton lines) with a
bilateral factor on the stability difference.  No point matching happens:
the destination skeleton acts purely as an attractor, and anchors whose best
candidate is too far away are filtered out as mapping to nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .skeleton import MultiScaleSkeleton

# An anchor is dropped when its best spatial weight is below the density at
# this Mahalanobis distance (the classic 3-sigma cut).
_FILTER_MAHALANOBIS = 3.0


@dataclass(frozen=True)
class AttractionParams:
    """Knobs of the skeletal attraction.

    sigma_spatial : spatial std-dev (px) along the candidate's normal
    eta : tangent-axis shrink factor; std-dev along the tangent is sigma*eta
    sigma_v : std-dev of the stability-difference bilateral factor
    min_weight : unnormalized spatial-weight floor below which an anchor is
        filtered (default: Gaussian density at Mahalanobis distance 3)
    neighbor_radius : candidate search cutoff in px (default 3*sigma_spatial;
        ``inf`` disables truncation)
    """

    sigma_spatial: float = 4.0
    eta: float = 0.1
    sigma_v: float = 0.5
    min_weight: float | None = None
    neighbor_radius: float | None = None

    def __post_init__(self):
        if self.sigma_spatial <= 0:
            raise ValueError("sigma_spatial must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.sigma_v <= 0:
            raise ValueError("sigma_v must be positive")
        if self.min_weight is not None and self.min_weight < 0:
            raise ValueError("min_weight must be >= 0")

    @property
    def radius(self) -> float:
        return (
            3.0 * self.sigma_spatial
            if self.neighbor_radius is None
            else float(self.neighbor_radius)
        )

    @property
    def weight_floor(self) -> float:
        if self.min_weight is not None:
            return float(self.min_weight)
        peak = 1.0 / (2.0 * math.pi * self.sigma_spatial**2 * self.eta)
        return peak * math.exp(-0.5 * _FILTER_MAHALANOBIS**2)


@dataclass(frozen=True)
class SparseFlow:
    """Displacement samples anchored at frame-1 skeletal points.

    anchors : (n, 2) float anchor coordinates as (x, y), distinct pixels,
        ordered row-major
    displacements : (n, 2) float displacement vectors
    shape : (height, width) of the source frames
    stabilities : (n,) anchor stability values
    filtered_count : number of frame-1 points dropped as mapping to nothing
    """

    anchors: np.ndarray
    displacements: np.ndarray
    shape: tuple[int, int]
    stabilities: np.ndarray
    filtered_count: int = 0

    def __len__(self):
        return len(self.anchors)


def covariance_at(tangent, normal, params: AttractionParams) -> np.ndarray:
    """Anisotropic attraction covariance at a candidate point.

    C = U diag(sigma^2, (sigma*eta)^2) U^T with U = [normal, tangent], so the
    Gaussian has std-dev sigma along the normal and sigma*eta along the
    tangent of the destination skeleton.
    """
    n = np.asarray(normal, dtype=np.float64)
    t = np.asarray(tangent, dtype=np.float64)
    u = np.stack([n, t], axis=1)
    l2 = np.diag([params.sigma_spatial**2, (params.sigma_spatial * params.eta) ** 2])
    return u @ l2 @ u.T


def _spatial_weights(dx, dy, tangents, normals, params: AttractionParams):
    """Unnormalized anisotropic Gaussian densities N(x | y, C_y) per candidate."""
    pn = dx * normals[:, 0] + dy * normals[:, 1]
    pt = dx * tangents[:, 0] + dy * tangents[:, 1]
    inv_n = 1.0 / params.sigma_spatial**2
    inv_t = 1.0 / (params.sigma_spatial * params.eta) ** 2
    norm = 1.0 / (2.0 * math.pi * params.sigma_spatial**2 * params.eta)
    return norm * np.exp(-0.5 * (pn * pn * inv_n + pt * pt * inv_t))


def _stability_weights(dh, params: AttractionParams):
    """Bilateral factor N(h(x) | h(y), sigma_v^2) per candidate."""
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * params.sigma_v)
    return norm * np.exp(-0.5 * (dh / params.sigma_v) ** 2)


def attraction_weights(
    anchor,
    anchor_stability: float,
    cand_positions,
    cand_stabilities,
    cand_tangents,
    cand_normals,
    params: AttractionParams,
) -> np.ndarray:
    """Normalized attraction probabilities p(y|x) over the candidate set.

    Returns an array aligned with the candidates, summing to one, or an empty
    array when the anchor is filtered: either no candidate's spatial weight
    reaches the floor (best match beyond ~3 Mahalanobis units) or the total
    weight underflows to zero.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    pos = np.asarray(cand_positions, dtype=np.float64)
    if len(pos) == 0:
        return np.zeros(0)
    dx = anchor[0] - pos[:, 0]
    dy = anchor[1] - pos[:, 1]
    wsp = _spatial_weights(dx, dy, np.asarray(cand_tangents), np.asarray(cand_normals), params)
    if wsp.max() < params.weight_floor:
        return np.zeros(0)
    w = wsp * _stability_weights(anchor_stability - np.asarray(cand_stabilities), params)
    total = w.sum()
    if total <= 0.0:
        return np.zeros(0)
    return w / total


def expected_destination(
    anchor,
    anchor_stability,
    cand_positions,
    cand_stabilities,
    cand_tangents,
    cand_normals,
    params: AttractionParams,
):
    """E[y|x] under the attraction probabilities, or None when filtered.

    The expectation is a convex combination of candidate positions and is not
    constrained to lie on the destination skeleton.
    """
    p = attraction_weights(
        anchor, anchor_stability, cand_positions, cand_stabilities,
        cand_tangents, cand_normals, params,
    )
    if len(p) == 0:
        return None
    pos = np.asarray(cand_positions, dtype=np.float64)
    return np.array([(pos[:, 0] * p).sum(), (pos[:, 1] * p).sum()])


class _GridIndex:
    """Uniform-grid spatial index over candidate points for radius queries."""

    def __init__(self, positions: np.ndarray, radius: float):
        self.positions = positions
        self.radius = radius
        self.cell = max(1, int(math.ceil(radius))) if math.isfinite(radius) else 0
        self.buckets: dict[tuple[int, int], list[int]] = {}
        if self.cell:
            for i, (x, y) in enumerate(positions):
                key = (int(x) // self.cell, int(y) // self.cell)
                self.buckets.setdefault(key, []).append(i)

    def query(self, x: float, y: float) -> np.ndarray:
        """Indices of candidates within ``radius`` of (x, y)."""
        if not self.cell:  # infinite radius: everything is a candidate
            return np.arange(len(self.positions))
        cx, cy = int(x) // self.cell, int(y) // self.cell
        found: list[int] = []
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                found.extend(self.buckets.get((gx, gy), ()))
        if not found:
            return np.zeros(0, dtype=np.int64)
        idx = np.asarray(found, dtype=np.int64)
        dx = self.positions[idx, 0] - x
        dy = self.positions[idx, 1] - y
        return idx[dx * dx + dy * dy <= self.radius * self.radius]


def estimate_sparse(
    s1: MultiScaleSkeleton,
    s2: MultiScaleSkeleton,
    params: AttractionParams | None = None,
) -> SparseFlow:
    """Sparse flow from skeleton 1 toward skeleton 2.

    One sample per unfiltered frame-1 point: displacement equals the expected
    destination minus the anchor.  An empty destination skeleton yields an
    empty sparse flow (the caller falls back to zero flow).
    """
    if s1.shape != s2.shape:
        raise ValueError("skeletons must come from same-sized frames")
    params = params or AttractionParams()
    h, w = s1.shape
    if len(s2) == 0 or len(s1) == 0:
        empty = np.zeros((0, 2))
        return SparseFlow(empty, empty.copy(), (h, w), np.zeros(0), len(s1))

    pos2 = s2.positions.astype(np.float64)
    index = _GridIndex(pos2, params.radius)
    anchors, disps, stabs = [], [], []
    filtered = 0
    for k in range(len(s1)):
        x, y = s1.positions[k]
        ci = index.query(float(x), float(y))
        dest = expected_destination(
            (float(x), float(y)),
            s1.stabilities[k],
            pos2[ci],
            s2.stabilities[ci],
            s2.tangents[ci],
            s2.normals[ci],
            params,
        )
        if dest is None:
            filtered += 1
            continue
        anchors.append((float(x), float(y)))
        disps.append((dest[0] - x, dest[1] - y))
        stabs.append(s1.stabilities[k])
    if not anchors:
        empty = np.zeros((0, 2))
        return SparseFlow(empty, empty.copy(), (h, w), np.zeros(0), filtered)
    return SparseFlow(
        np.asarray(anchors), np.asarray(disps), (h, w), np.asarray(stabs), filtered
    )
