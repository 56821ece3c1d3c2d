"""Sparse IR observation extraction.

The active-IR image carries reflectance information only where the projector
pattern lights the surface, so fitting uses one observation per 5x5 cell of
the central 192x192 crop: the brightest valid-depth pixel of the cell,
averaged with its 4-neighborhood to tame the dot pattern. Shading geometry
(point, normal, light/view directions, distance) is reconstructed per sample
from the depth image, the pose, and the projector offset.
"""

from __future__ import annotations

import numpy as np

from ..brdffit.samples import IrSamples
from ..geometry import PinholeCamera, Pose, backproject_depth_map

CROP = 192
CELL = 5


def depth_normals(camera: PinholeCamera, depth: np.ndarray) -> np.ndarray:
    """Camera-frame unit normals from central differences of the depth map.

    Pixels with any invalid neighbor get a zero normal.
    """
    pts = backproject_depth_map(camera, depth)
    dx = np.zeros_like(pts)
    dy = np.zeros_like(pts)
    dx[:, 1:-1] = pts[:, 2:] - pts[:, :-2]
    dy[1:-1, :] = pts[2:, :] - pts[:-2, :]
    n = np.cross(dx, dy)
    valid = depth > 0
    vstrict = np.zeros_like(valid)
    vstrict[1:-1, 1:-1] = (
        valid[1:-1, 1:-1]
        & valid[1:-1, 2:]
        & valid[1:-1, :-2]
        & valid[2:, 1:-1]
        & valid[:-2, 1:-1]
    )
    lens = np.linalg.norm(n, axis=-1)
    ok = vstrict & (lens > 1e-12)
    n[~ok] = 0.0
    n[ok] /= lens[ok][:, None]
    # orient toward the camera: the viewing ray is +z-ish, normals face -z-ish
    flip = np.sum(n * pts, axis=-1) > 0
    n[flip] *= -1.0
    return n


def subsample_ir(
    ir: np.ndarray,
    depth: np.ndarray,
    camera: PinholeCamera,
    pose: Pose,
    projector_offset,
    frame_id: int = 0,
    segment_image: np.ndarray | None = None,
    texel_image: np.ndarray | None = None,
    normal_image: np.ndarray | None = None,
) -> IrSamples:
    """One shading observation per 5x5 cell of the central 192x192 crop.

    `segment_image` / `texel_image` optionally attribute each sample to a
    material segment and atlas texel; `normal_image` (world frame) overrides
    the depth-derived normals (useful when the surface mesh is known).
    """
    h, w = ir.shape
    if h < CROP or w < CROP:
        raise ValueError(f"ir image must be at least {CROP}x{CROP}")
    y0 = (h - CROP) // 2
    x0 = (w - CROP) // 2
    n_cells = CROP // CELL
    crop_ir = ir[y0 : y0 + n_cells * CELL, x0 : x0 + n_cells * CELL]
    crop_depth = depth[y0 : y0 + n_cells * CELL, x0 : x0 + n_cells * CELL]

    cells_ir = crop_ir.reshape(n_cells, CELL, n_cells, CELL).transpose(0, 2, 1, 3)
    cells_valid = (
        crop_depth.reshape(n_cells, CELL, n_cells, CELL).transpose(0, 2, 1, 3) > 0
    )
    flat_ir = cells_ir.reshape(n_cells, n_cells, CELL * CELL)
    flat_valid = cells_valid.reshape(n_cells, n_cells, CELL * CELL)
    masked = np.where(flat_valid, flat_ir, -np.inf)
    best = np.argmax(masked, axis=2)
    has_sample = flat_valid.any(axis=2)

    cy, cx = np.nonzero(has_sample)
    if len(cy) == 0:
        return IrSamples(
            intensity=np.zeros(0), n=np.zeros((0, 3)), l=np.zeros((0, 3)),
            v=np.zeros((0, 3)), d=np.ones(0),
        )
    b = best[cy, cx]
    py = y0 + cy * CELL + b // CELL
    px = x0 + cx * CELL + b % CELL

    # average the winning pixel with its in-bounds 4-neighborhood
    vals = ir[py, px].astype(np.float64)
    cnt = np.ones(len(py))
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ny, nx = py + dy, px + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        vals[ok] += ir[ny[ok], nx[ok]]
        cnt[ok] += 1.0
    intensity = vals / cnt

    pts_cam = backproject_depth_map(camera, depth)[py, px]
    pts = pts_cam @ pose.R.T + pose.t
    if normal_image is not None:
        normals = normal_image[py, px]
    else:
        normals = depth_normals(camera, depth)[py, px] @ pose.R.T
    light = pose.apply(np.asarray(projector_offset, dtype=np.float64))
    to_light = light - pts
    d = np.linalg.norm(to_light, axis=1)
    to_cam = pose.t - pts
    vlen = np.linalg.norm(to_cam, axis=1)
    good = (d > 1e-9) & (vlen > 1e-9) & (np.linalg.norm(normals, axis=1) > 0.5)
    return IrSamples(
        intensity=np.clip(intensity[good], 0.0, 1.0),
        n=normals[good] / np.linalg.norm(normals[good], axis=1, keepdims=True),
        l=to_light[good] / d[good, None],
        v=to_cam[good] / vlen[good, None],
        d=d[good],
        frame_id=np.full(int(good.sum()), frame_id, dtype=np.int64),
        segment=segment_image[py, px][good] if segment_image is not None else None,
        point=pts[good],
        texel=texel_image[py, px][good] if texel_image is not None else None,
    )
