"""Texture fusion: weighted frame blending into an atlas plus rasterized
appearance predictions."""

from .atlas import (
    OBS_DTYPE,
    TextureAtlas,
    load_observations,
    observation_records,
    save_observations,
)
from .fuse import DEPTH_TEST_SCALE, fuse_frame
from .raster import PredictionView, rasterize, render_prediction
from .weights import (
    DELTA_Z,
    SIGMA_M,
    FusionWeights,
    compute_weights,
    discontinuity_mask,
    importance,
    motion_factor,
)

__all__ = [
    "DELTA_Z",
    "DEPTH_TEST_SCALE",
    "OBS_DTYPE",
    "SIGMA_M",
    "FusionWeights",
    "PredictionView",
    "TextureAtlas",
    "compute_weights",
    "discontinuity_mask",
    "fuse_frame",
    "importance",
    "load_observations",
    "motion_factor",
    "observation_records",
    "rasterize",
    "render_prediction",
    "save_observations",
]
