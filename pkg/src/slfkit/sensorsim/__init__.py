"""Synthetic RGBD+IR sensor: ground-truth scenes, frame rendering, sampling."""

from .render import (
    SensorFrame,
    generate_sequence,
    load_sequence,
    render_frame,
    save_sequence,
)
from .scene import GroundTruthScene, IrProjector, SceneMaterial
from .subsample import CELL, CROP, depth_normals, subsample_ir

__all__ = [
    "CELL",
    "CROP",
    "GroundTruthScene",
    "IrProjector",
    "SceneMaterial",
    "SensorFrame",
    "depth_normals",
    "generate_sequence",
    "load_sequence",
    "render_frame",
    "save_sequence",
    "subsample_ir",
]
