"""Blending frames into the texture atlas."""

from __future__ import annotations

import numpy as np

from ..geometry.atlas import AtlasTables
from ..geometry.camera import PinholeCamera, project_valid
from ..geometry.pose import Pose
from ..imgio import bilinear_sample
from .atlas import TextureAtlas, observation_records
from .weights import DELTA_Z, FusionWeights

# visibility epsilon is looser than the discontinuity threshold so texels on
# legitimately sloped surfaces still pass while occluded ones do not
DEPTH_TEST_SCALE = 2.0


def fuse_frame(
    atlas: TextureAtlas,
    tables: AtlasTables,
    image: np.ndarray,
    depth: np.ndarray,
    pose: Pose,
    camera: PinholeCamera,
    weights: FusionWeights,
    delta_z: float = DELTA_Z,
    frame_id: int | None = None,
) -> np.ndarray | None:
    """Accumulate one frame's colors into the atlas.

    Each covered texel's surface point is projected into the frame; texels
    that land inside the image and pass the depth test against the frame's
    depth map are blended in with the pixel's fusion weight. Returns the
    observation records for the sidecar when `frame_id` is given, else None.
    """
    if image.shape[:2] != depth.shape:
        raise ValueError("image and depth shape mismatch")
    h, w = depth.shape
    pc = pose.inverse().apply(tables.points)
    pix, in_front = project_valid(camera, pc)
    px = np.where(in_front, pix[:, 0], 0.0)
    py = np.where(in_front, pix[:, 1], 0.0)
    inside = in_front & (px >= 0) & (px < w) & (py >= 0) & (py < h)
    ix_img = np.clip(np.floor(px).astype(np.int64), 0, w - 1)
    iy_img = np.clip(np.floor(py).astype(np.int64), 0, h - 1)
    d_stored = depth[iy_img, ix_img]
    visible = (
        inside
        & (d_stored > 0)
        & (np.abs(d_stored - pc[:, 2]) <= DEPTH_TEST_SCALE * delta_z)
    )
    if not np.any(visible):
        return observation_records([], [], np.zeros((0, 3)), []) if frame_id is not None else None

    w_img = weights.image()
    w_tex = bilinear_sample(w_img, px[visible], py[visible])
    rgb = bilinear_sample(image, px[visible], py[visible])
    atlas.accumulate(tables.iy[visible], tables.ix[visible], rgb, w_tex)

    if frame_id is None:
        return None
    keep = w_tex > 0
    return observation_records(
        tables.texel_ids[visible][keep],
        np.full(int(keep.sum()), frame_id, dtype=np.uint32),
        rgb[keep],
        w_tex[keep],
    )
