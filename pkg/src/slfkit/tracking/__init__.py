"""Frame-to-model pose estimation: point-plane ICP plus photometric
refinement on gradient-magnitude images."""

from .icp import (
    ANGLE_GATE_DEG,
    DIST_GATE,
    MIN_CORRESPONDENCES,
    IcpResult,
    TrackingLostError,
    icp_align,
    icp_terms,
)
from .photo import (
    ITERS_PER_LEVEL,
    N_LEVELS,
    REJECT_THRESHOLD,
    PredictionCoverageError,
    RefineResult,
    build_levels,
    gradient_magnitude,
    photo_terms,
    photometric_refine,
    sample_with_grad,
)
from .trajectory import load_trajectory, save_trajectory

__all__ = [
    "ANGLE_GATE_DEG",
    "DIST_GATE",
    "ITERS_PER_LEVEL",
    "MIN_CORRESPONDENCES",
    "N_LEVELS",
    "REJECT_THRESHOLD",
    "IcpResult",
    "PredictionCoverageError",
    "RefineResult",
    "TrackingLostError",
    "build_levels",
    "gradient_magnitude",
    "icp_align",
    "icp_terms",
    "load_trajectory",
    "photo_terms",
    "photometric_refine",
    "sample_with_grad",
    "save_trajectory",
]
