"""smokeflow: skeletal dense motion estimation for smoke image sequences.

Pipeline: multi-scale ridge skeletons -> probabilistic sparse flow ->
DCT-domain dense interpolation -> variational refinement, plus synthetic
frame-pair generation with analytic ground truth and evaluation metrics.
"""

from .dense_interp import InterpParams, filtering_tensor, interpolate
from .estimator import SkeletalFlowEstimator
from .flowio import colorize, read_flo, write_flo
from .imaging import (
    gaussian_blur,
    gradient,
    read_image,
    threshold_mask,
    warp_backward,
    write_png,
)
from .metrics import angular_error, endpoint_error, interpolation_error
from .refine import RefineParams, energy, refine
from .skeleton import MultiScaleSkeleton, build_skeleton, detect_ridges
from .sparse_flow import AttractionParams, SparseFlow, estimate_sparse
from .synth import FlowSpec, SynthCase, advect, displacement_field, make_density

__version__ = "0.1.0"

__all__ = [
    "AttractionParams",
    "FlowSpec",
    "InterpParams",
    "MultiScaleSkeleton",
    "RefineParams",
    "SkeletalFlowEstimator",
    "SparseFlow",
    "SynthCase",
    "advect",
    "angular_error",
    "build_skeleton",
    "colorize",
    "detect_ridges",
    "displacement_field",
    "endpoint_error",
    "energy",
    "estimate_sparse",
    "filtering_tensor",
    "gaussian_blur",
    "gradient",
    "interpolate",
    "interpolation_error",
    "make_density",
    "read_flo",
    "read_image",
    "refine",
    "threshold_mask",
    "warp_backward",
    "write_flo",
    "write_png",
]
