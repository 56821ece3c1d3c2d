"""Dense projective point-to-plane ICP between a live depth map and a model view."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.camera import PinholeCamera, backproject_depth_map
from ..geometry.pose import Pose, se3_exp
from ..sensorsim import depth_normals

MIN_CORRESPONDENCES = 500
DIST_GATE = 0.05
ANGLE_GATE_DEG = 30.0
MAX_ITER = 15
STEP_TOL = 1e-6
RANK_TOL = 1e-6


class TrackingLostError(RuntimeError):
    """Too few gated correspondences to constrain the pose."""


@dataclass
class IcpResult:
    pose: Pose  # absolute live-camera pose
    n_iter: int
    cost: float  # mean squared point-plane distance at the solution
    n_valid: int  # correspondences in the final iteration
    rank_deficient: bool  # normal equations singular (e.g. planar-only scene)


def _associate(camera, rel, live_pts, live_normals, model_pts, model_normals, dist_gate, cos_gate):
    """Projective association of live points into the model view.

    Returns (p, q, n) in the model camera frame after gating, where p are
    transformed live points, q model points, n model normals.
    """
    h, w = model_pts.shape[:2]
    p = live_pts @ rel.R.T + rel.t
    n_live = live_normals @ rel.R.T
    z = p[:, 2]
    ok = z > 1e-6
    px = np.where(ok, p[:, 0] / np.where(ok, z, 1.0) * camera.fx + camera.cx, -1.0)
    py = np.where(ok, p[:, 1] / np.where(ok, z, 1.0) * camera.fy + camera.cy, -1.0)
    ix = np.floor(px).astype(np.int64)
    iy = np.floor(py).astype(np.int64)
    ok &= (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    ix = np.clip(ix, 0, w - 1)
    iy = np.clip(iy, 0, h - 1)
    q = model_pts[iy, ix]
    n = model_normals[iy, ix]
    ok &= q[:, 2] > 0
    ok &= np.linalg.norm(n, axis=1) > 0.5  # zero normal marks invalid
    ok &= np.linalg.norm(p - q, axis=1) <= dist_gate
    ok &= np.sum(n_live * n, axis=1) >= cos_gate
    return p[ok], q[ok], n[ok]


def icp_terms(p, q, n):
    """Point-plane residuals and Jacobian rows for a twist [w, v] applied as
    exp(xi) . p (matching se3_exp ordering: rotation first)."""
    r = np.sum((p - q) * n, axis=1)
    jac = np.hstack([np.cross(p, n), n])
    return r, jac


def icp_align(
    camera: PinholeCamera,
    live_depth: np.ndarray,
    model_depth: np.ndarray,
    model_normals: np.ndarray,
    model_pose: Pose,
    init: Pose | None = None,
    dist_gate: float = DIST_GATE,
    angle_gate_deg: float = ANGLE_GATE_DEG,
    max_iter: int = MAX_ITER,
    min_correspondences: int = MIN_CORRESPONDENCES,
) -> IcpResult:
    """Align a live depth map against a model view rendered at `model_pose`.

    `model_normals` are camera-frame normals of the model view (zero rows
    mark invalid pixels). `init` is the initial absolute live pose, default
    `model_pose`. Minimizes the point-to-plane distance by Gauss-Newton on a
    small-angle twist; correspondences re-associated every iteration.
    """
    if live_depth.shape != model_depth.shape:
        raise ValueError("live and model depth shapes differ")
    live_pts_img = backproject_depth_map(camera, live_depth)
    live_nrm_img = depth_normals(camera, live_depth)
    live_ok = (live_depth > 0) & (np.linalg.norm(live_nrm_img, axis=-1) > 0.5)
    live_pts = live_pts_img[live_ok]
    live_nrm = live_nrm_img[live_ok]
    model_pts = backproject_depth_map(camera, model_depth)

    init = model_pose if init is None else init
    rel = model_pose.inverse().compose(init)  # live camera -> model camera
    cos_gate = np.cos(np.radians(angle_gate_deg))
    cost = np.inf
    n_valid = 0
    rank_deficient = False
    it = 0
    for it in range(1, max_iter + 1):
        p, q, n = _associate(
            camera, rel, live_pts, live_nrm, model_pts, model_normals, dist_gate, cos_gate
        )
        n_valid = len(p)
        if n_valid < min_correspondences:
            raise TrackingLostError(
                f"{n_valid} correspondences after gating (need {min_correspondences})"
            )
        r, jac = icp_terms(p, q, n)
        cost = float(np.mean(r**2))
        a = jac.T @ jac
        b = -jac.T @ r
        sing = np.linalg.svd(a, compute_uv=False)
        if sing[-1] < RANK_TOL * sing[0]:
            rank_deficient = True
            step = np.linalg.lstsq(a, b, rcond=RANK_TOL)[0]
        else:
            step = np.linalg.solve(a, b)
        rel = se3_exp(step).compose(rel)
        if np.linalg.norm(step) < STEP_TOL:
            break
    return IcpResult(
        pose=model_pose.compose(rel),
        n_iter=it,
        cost=cost,
        n_valid=n_valid,
        rank_deficient=rank_deficient,
    )
