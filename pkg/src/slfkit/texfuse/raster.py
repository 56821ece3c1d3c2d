"""Z-buffer rasterizer producing appearance predictions from the atlas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.atlas import surface_to_atlas
from ..geometry.camera import PinholeCamera
from ..geometry.mesh import TriangleMesh
from ..geometry.pose import Pose
from ..imgio import bilinear_sample
from .atlas import TextureAtlas

MIN_Z = 1e-6


@dataclass
class PredictionView:
    """Rasterized model view: color where the atlas has data, plus geometry."""

    rgb: np.ndarray  # (H, W, 3) linear; 0 where invalid
    depth: np.ndarray  # (H, W) camera z; 0 where no surface
    normals: np.ndarray  # (H, W, 3) world frame; 0 where no surface
    face: np.ndarray  # (H, W) face index, -1 where no surface
    bary: np.ndarray  # (H, W, 3) perspective-correct barycentrics
    valid: np.ndarray  # (H, W) surface hit and atlas observed


def rasterize(
    mesh: TriangleMesh, camera: PinholeCamera, pose: Pose
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Depth, face index, and perspective-correct barycentrics per pixel.

    Faces with any vertex at or behind the camera are skipped (no near-plane
    clipping); scenes here keep the camera clear of the geometry.
    """
    h, w = camera.height, camera.width
    zbuf = np.full((h, w), np.inf)
    face_idx = np.full((h, w), -1, dtype=np.int64)
    bary_out = np.zeros((h, w, 3))

    pc = pose.inverse().apply(mesh.vertices)
    z = pc[:, 2]
    sx = pc[:, 0] / np.maximum(z, MIN_Z) * camera.fx + camera.cx
    sy = pc[:, 1] / np.maximum(z, MIN_Z) * camera.fy + camera.cy

    tri_z = z[mesh.faces]
    usable = np.all(tri_z > MIN_Z, axis=1)
    tx = sx[mesh.faces]
    ty = sy[mesh.faces]

    for f in np.flatnonzero(usable):
        x0, x1, x2 = tx[f]
        y0, y1, y2 = ty[f]
        lo_x = max(int(np.floor(min(x0, x1, x2) - 0.5)), 0)
        hi_x = min(int(np.ceil(max(x0, x1, x2) - 0.5)), w - 1)
        lo_y = max(int(np.floor(min(y0, y1, y2) - 0.5)), 0)
        hi_y = min(int(np.ceil(max(y0, y1, y2) - 0.5)), h - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        gx, gy = np.meshgrid(
            np.arange(lo_x, hi_x + 1) + 0.5, np.arange(lo_y, hi_y + 1) + 0.5
        )
        d = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
        if abs(d) < 1e-12:
            continue
        l0 = ((y1 - y2) * (gx - x2) + (x2 - x1) * (gy - y2)) / d
        l1 = ((y2 - y0) * (gx - x2) + (x0 - x2) * (gy - y2)) / d
        l2 = 1.0 - l0 - l1
        inside = (l0 >= 0) & (l1 >= 0) & (l2 >= 0)
        if not inside.any():
            continue
        # perspective correction: screen barycentrics weight 1/z linearly
        inv_z = l0 / tri_z[f, 0] + l1 / tri_z[f, 1] + l2 / tri_z[f, 2]
        depth = 1.0 / inv_z
        ys, xs = np.nonzero(inside)
        rows = ys + lo_y
        cols = xs + lo_x
        better = depth[ys, xs] < zbuf[rows, cols]
        rows, cols = rows[better], cols[better]
        ys, xs = ys[better], xs[better]
        zbuf[rows, cols] = depth[ys, xs]
        face_idx[rows, cols] = f
        bw = np.stack(
            [
                l0[ys, xs] / tri_z[f, 0],
                l1[ys, xs] / tri_z[f, 1],
                l2[ys, xs] / tri_z[f, 2],
            ],
            axis=1,
        )
        bary_out[rows, cols] = bw / bw.sum(axis=1, keepdims=True)

    zbuf[face_idx < 0] = 0.0
    return zbuf, face_idx, bary_out


def render_prediction(
    atlas: TextureAtlas, mesh: TriangleMesh, camera: PinholeCamera, pose: Pose
) -> PredictionView:
    """Render the fused appearance with validity restricted to observed texels."""
    depth, face_idx, bary = rasterize(mesh, camera, pose)
    h, w = depth.shape
    rgb = np.zeros((h, w, 3))
    normals = np.zeros((h, w, 3))
    valid = np.zeros((h, w), dtype=bool)
    hit = face_idx >= 0
    if np.any(hit):
        hy, hx = np.nonzero(hit)
        f = face_idx[hy, hx]
        b = bary[hy, hx]
        n = np.einsum("pk,pkd->pd", b, mesh.normals[mesh.faces[f]])
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        normals[hy, hx] = n / lens
        uv = surface_to_atlas(mesh, f, b)
        x = uv[:, 0] * atlas.size
        y = uv[:, 1] * atlas.size
        obs = atlas.observed_mask().astype(np.float64)
        cov = bilinear_sample(obs, x, y)
        col = bilinear_sample(atlas.rgb * obs[..., None], x, y)
        seen = cov > 1e-9
        col[seen] /= cov[seen][:, None]
        col[~seen] = 0.0
        rgb[hy, hx] = col
        valid[hy, hx] = seen
    return PredictionView(
        rgb=rgb, depth=depth, normals=normals, face=face_idx, bary=bary, valid=valid
    )
