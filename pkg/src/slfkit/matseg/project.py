"""Projecting per-frame class probability images onto mesh vertices."""

from __future__ import annotations

import numpy as np

from ..geometry.camera import PinholeCamera, project_valid
from ..geometry.mesh import TriangleMesh
from ..geometry.pose import Pose
from ..imgio import bilinear_sample
from .mrf import VertexProbabilities

DEPTH_TOL = 0.04


def project_probabilities(
    images: list[np.ndarray],
    depths: list[np.ndarray],
    poses: list[Pose],
    camera: PinholeCamera,
    mesh: TriangleMesh,
    depth_tol: float = DEPTH_TOL,
) -> VertexProbabilities:
    """Average probability vectors over the frames where each vertex is seen.

    `images` are (H, W, K) probability maps, `depths` the matching depth
    images used for visibility testing, `poses` camera-to-world transforms.
    A vertex counts as seen when it projects inside the image and its camera
    depth agrees with the stored depth within `depth_tol`. Vertices seen in
    no frame fall back to the uniform distribution.
    """
    if not (len(images) == len(depths) == len(poses)):
        raise ValueError("images, depths, and poses must align")
    if not images:
        raise ValueError("need at least one frame")
    k_classes = images[0].shape[2]
    n_v = mesh.n_vertices
    acc = np.zeros((n_v, k_classes))
    count = np.zeros(n_v, dtype=np.int64)
    for img, depth, pose in zip(images, depths, poses):
        if img.shape[:2] != depth.shape:
            raise ValueError("probability image and depth shape mismatch")
        if img.shape[2] != k_classes:
            raise ValueError("inconsistent class count across frames")
        pc = pose.inverse().apply(mesh.vertices)
        pix, valid = project_valid(camera, pc)
        h, w = depth.shape
        px = np.where(valid, pix[:, 0], 0.0)
        py = np.where(valid, pix[:, 1], 0.0)
        inside = valid & (px >= 0) & (px < w) & (py >= 0) & (py < h)
        # pixel j covers [j, j+1): floor matches the i + 0.5 center convention
        ix = np.clip(np.floor(px).astype(np.int64), 0, w - 1)
        iy = np.clip(np.floor(py).astype(np.int64), 0, h - 1)
        d_stored = depth[iy, ix]
        visible = inside & (d_stored > 0) & (np.abs(d_stored - pc[:, 2]) <= depth_tol)
        if not np.any(visible):
            continue
        sampled = bilinear_sample(img, px[visible], py[visible])
        acc[visible] += sampled
        count[visible] += 1
    p = np.where(count[:, None] > 0, acc / np.maximum(count[:, None], 1), 1.0 / k_classes)
    return VertexProbabilities(p, count)
