"""Per-frame fusion weights: motion, depth-discontinuity, and importance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.camera import PinholeCamera
from ..geometry.pose import Pose, so3_log
from ..sensorsim import depth_normals

SIGMA_M = 0.1
DELTA_Z = 0.02


@dataclass
class FusionWeights:
    """w = m * z * s per pixel.

    m is one scalar per frame (camera motion), z a binary mask rejecting
    depth discontinuities, s the per-pixel importance of the observation.
    """

    m: float
    z: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("motion factor must be non-negative")
        if np.any(self.s < 0):
            raise ValueError("importance must be non-negative")

    def image(self) -> np.ndarray:
        return self.m * self.z * self.s


def motion_factor(pose_prev: Pose | None, pose_cur: Pose, sigma_m: float = SIGMA_M) -> float:
    """exp(-(|dt|^2 + |dr|^2) / sigma^2); 1.0 for the first frame."""
    if pose_prev is None:
        return 1.0
    dt = pose_cur.t - pose_prev.t
    dr = so3_log(pose_prev.R.T @ pose_cur.R)
    return float(np.exp(-(dt @ dt + dr @ dr) / sigma_m**2))


def discontinuity_mask(depth: np.ndarray, delta_z: float = DELTA_Z) -> np.ndarray:
    """0 where any of the 8 neighbors differs in depth by more than delta_z.

    Invalid pixels (depth 0) and pixels adjacent to invalid ones are also
    rejected; border pixels lack a full neighborhood and are rejected too.
    """
    depth = np.asarray(depth, dtype=np.float64)
    h, w = depth.shape
    ok = np.zeros((h, w))
    if h < 3 or w < 3:
        return ok
    center = depth[1:-1, 1:-1]
    good = center > 0
    max_diff = np.zeros_like(center)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = depth[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
            good &= nb > 0
            max_diff = np.maximum(max_diff, np.abs(nb - center))
    ok[1:-1, 1:-1] = good & (max_diff <= delta_z)
    return ok


def importance(camera: PinholeCamera, depth: np.ndarray) -> np.ndarray:
    """(n . v) / Z^2 with v the optical axis: grazing or distant counts less."""
    normals = depth_normals(camera, depth)
    ndv = np.maximum(-normals[..., 2], 0.0)  # normals face the camera (-z)
    z2 = np.where(depth > 0, np.asarray(depth, dtype=np.float64) ** 2, 1.0)
    return np.where(depth > 0, ndv / z2, 0.0)


def compute_weights(
    camera: PinholeCamera,
    depth: np.ndarray,
    pose_cur: Pose,
    pose_prev: Pose | None = None,
    sigma_m: float = SIGMA_M,
    delta_z: float = DELTA_Z,
) -> FusionWeights:
    return FusionWeights(
        m=motion_factor(pose_prev, pose_cur, sigma_m),
        z=discontinuity_mask(depth, delta_z),
        s=importance(camera, depth),
    )
