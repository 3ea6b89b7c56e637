"""Scikit-learn style front end for the full estimation pipeline."""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator

from . import refine as refinement
from .dense_interp import InterpParams, interpolate
from .imaging import as_frame, threshold_mask
from .skeleton import DEFAULT_SCALES, build_skeleton, check_scales
from .sparse_flow import AttractionParams, estimate_sparse


class SkeletalFlowEstimator(BaseEstimator):
    """Dense smoke motion estimation from a frame pair.

    The pipeline segments each frame against the dark background, builds
    multi-scale ridge skeletons, estimates a sparse flow by skeletal
    attraction, interpolates it densely in the DCT domain and (optionally)
    refines the result variationally.  Stateless between calls: ``fit`` only
    validates parameters, ``predict(frame1, frame2)`` returns the (H, W, 2)
    flow field and records a run report in ``report_``.

    Parameters
    ----------
    scales : blur scales of the multi-scale skeleton
    epsilon : segmentation threshold on the 8-bit intensity scale
    sigma_spatial, eta, sigma_v, min_weight, neighbor_radius :
        attraction parameters; ``sigma_v=None`` resolves to 2/(N-1) for N
        scales, ``min_weight=None`` to the 3-sigma density floor and
        ``neighbor_radius=None`` to 3*sigma_spatial
    frame_radius : neighborhood radius of the tangent/normal estimation
    lam, tensor_variant, interp_tol, interp_max_iters :
        dense interpolation parameters
    refine : set False for the interpolation-only ("noEF") output
    alpha, gamma, penalizer_eps, outer_iters, sor_iters, sor_omega :
        variational refinement parameters
    """

    def __init__(
        self,
        scales=DEFAULT_SCALES,
        epsilon=1.0,
        sigma_spatial=4.0,
        eta=0.1,
        sigma_v=None,
        min_weight=None,
        neighbor_radius=None,
        frame_radius=5,
        lam=1.0,
        tensor_variant="garcia",
        interp_tol=1e-6,
        interp_max_iters=500,
        refine=True,
        alpha=1.0,
        gamma=0.05,
        penalizer_eps=1e-3,
        outer_iters=40,
        sor_iters=30,
        sor_omega=1.98,
    ):
        self.scales = scales
        self.epsilon = epsilon
        self.sigma_spatial = sigma_spatial
        self.eta = eta
        self.sigma_v = sigma_v
        self.min_weight = min_weight
        self.neighbor_radius = neighbor_radius
        self.frame_radius = frame_radius
        self.lam = lam
        self.tensor_variant = tensor_variant
        self.interp_tol = interp_tol
        self.interp_max_iters = interp_max_iters
        self.refine = refine
        self.alpha = alpha
        self.gamma = gamma
        self.penalizer_eps = penalizer_eps
        self.outer_iters = outer_iters
        self.sor_iters = sor_iters
        self.sor_omega = sor_omega

    def _resolved_params(self):
        scales = check_scales(self.scales)
        sigma_v = self.sigma_v if self.sigma_v is not None else 2.0 / (len(scales) - 1)
        attraction = AttractionParams(
            sigma_spatial=self.sigma_spatial,
            eta=self.eta,
            sigma_v=sigma_v,
            min_weight=self.min_weight,
            neighbor_radius=self.neighbor_radius,
        )
        interp = InterpParams(
            lam=self.lam,
            max_iters=self.interp_max_iters,
            tol=self.interp_tol,
            tensor_variant=self.tensor_variant,
        )
        refine_params = refinement.RefineParams(
            alpha=self.alpha,
            gamma=self.gamma,
            penalizer_eps=self.penalizer_eps,
            outer_iters=self.outer_iters,
            sor_iters=self.sor_iters,
            sor_omega=self.sor_omega,
        )
        return scales, attraction, interp, refine_params

    def fit(self, X=None, y=None):
        """Validate parameters; the estimator keeps no fitted state."""
        self._resolved_params()
        if not 0.0 <= self.epsilon <= 255.0:
            raise ValueError("epsilon must be in [0, 255]")
        return self

    def predict(self, frame1, frame2):
        """Estimate the dense flow from frame1 to frame2.

        Returns an (H, W, 2) float array.  When no smoke is detected in
        either frame (empty skeleton or fully filtered sparse flow) the
        output degrades to zero flow and ``report_["status"]`` says so.
        """
        scales, attraction, interp_params, refine_params = self._resolved_params()
        f1 = as_frame(frame1)
        f2 = as_frame(frame2)
        if f1.shape != f2.shape:
            raise ValueError("frame dimensions must match")

        report = {
            "status": "ok",
            "mode": "full" if self.refine else "noEF",
            "stages_ms": {},
            "counts": {},
        }
        t0 = time.perf_counter()
        mask1 = threshold_mask(f1, self.epsilon)
        mask2 = threshold_mask(f2, self.epsilon)
        report["stages_ms"]["segmentation"] = _ms_since(t0)

        t0 = time.perf_counter()
        sk1 = build_skeleton(f1, mask1, scales, self.frame_radius)
        sk2 = build_skeleton(f2, mask2, scales, self.frame_radius)
        report["stages_ms"]["skeleton"] = _ms_since(t0)
        report["counts"]["skeleton1_points"] = len(sk1)
        report["counts"]["skeleton2_points"] = len(sk2)

        self.skeletons_ = (sk1, sk2)
        if len(sk1) == 0 or len(sk2) == 0:
            return self._degrade(f1.shape, report, "no smoke detected")

        t0 = time.perf_counter()
        sparse = estimate_sparse(sk1, sk2, attraction)
        report["stages_ms"]["sparse_flow"] = _ms_since(t0)
        report["counts"]["sparse_samples"] = len(sparse)
        report["counts"]["filtered_points"] = sparse.filtered_count
        self.sparse_ = sparse
        if len(sparse) == 0:
            return self._degrade(f1.shape, report, "all sparse samples filtered")

        t0 = time.perf_counter()
        flow = interpolate(sparse, None, interp_params)
        report["stages_ms"]["dense_interp"] = _ms_since(t0)

        if self.refine:
            t0 = time.perf_counter()
            flow = refinement.refine(f1, f2, flow, refine_params)
            report["stages_ms"]["refine"] = _ms_since(t0)

        self.report_ = report
        return flow

    def _degrade(self, shape, report, reason):
        report["status"] = "no-smoke"
        report["warning"] = reason
        self.sparse_ = None
        self.report_ = report
        return np.zeros((*shape, 2))


def _ms_since(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)
