"""Photometric pose refinement on gradient-magnitude images.

The live image is warped toward a rendered prediction of the model; the
objective compares Sobel gradient magnitudes of the greyscale images, which
cancels low-frequency appearance changes (exposure, broad highlights) that
violate brightness constancy. Optimization is coarse-to-fine Gauss-Newton
over a three-level pyramid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from ..geometry.camera import PinholeCamera, backproject_depth_map
from ..geometry.pose import Pose, se3_exp
from ..imgio import greyscale

REJECT_THRESHOLD = 0.2
N_LEVELS = 3
ITERS_PER_LEVEL = 10
STEP_TOL = 1e-6
MIN_VALID_FRACTION = 0.2

_GAUSS5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
_SOBEL_D = np.array([1.0, 0.0, -1.0])
_SOBEL_S = np.array([1.0, 2.0, 1.0])


class PredictionCoverageError(ValueError):
    """The model prediction covers too little of the view to refine against."""


@dataclass
class RefineResult:
    pose: Pose  # absolute live-camera pose
    cost: float  # mean squared accepted residual at the finest level
    n_valid: int
    diverged: bool  # finest-level cost got worse than the init; pose equals the init
    level_costs: list = field(default_factory=list)  # accepted costs per level


def gradient_magnitude(grey: np.ndarray) -> np.ndarray:
    """Sobel gradient magnitude, normalized so a unit step reads 0.5."""
    gx = convolve1d(convolve1d(grey, _SOBEL_D, axis=1), _SOBEL_S, axis=0) / 8.0
    gy = convolve1d(convolve1d(grey, _SOBEL_D, axis=0), _SOBEL_S, axis=1) / 8.0
    return np.hypot(gx, gy)


def _downsample_image(img: np.ndarray) -> np.ndarray:
    """5-tap Gaussian blur, then half-pixel-centered 2x decimation.

    Averaging adjacent blurred pixels centers each output sample on the
    boundary between input pairs, which is exactly where camera.scaled(0.5)
    expects it.
    """
    b = convolve1d(convolve1d(img, _GAUSS5, axis=0, mode="nearest"), _GAUSS5, axis=1, mode="nearest")
    h2, w2 = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    b = b[:h2, :w2]
    b = 0.5 * (b[0::2] + b[1::2])
    return 0.5 * (b[:, 0::2] + b[:, 1::2])


def _downsample_depth(depth: np.ndarray, valid: np.ndarray):
    """2x2 block mean where the whole block is valid, else invalid."""
    h2, w2 = (depth.shape[0] // 2) * 2, (depth.shape[1] // 2) * 2
    d = depth[:h2, :w2]
    v = valid[:h2, :w2]
    blocks_d = d.reshape(h2 // 2, 2, w2 // 2, 2)
    blocks_v = v.reshape(h2 // 2, 2, w2 // 2, 2)
    all_ok = blocks_v.all(axis=(1, 3))
    mean_d = blocks_d.mean(axis=(1, 3))
    return np.where(all_ok, mean_d, 0.0), all_ok


def sample_with_grad(image: np.ndarray, x, y):
    """Bilinear sample plus the exact spatial gradient of the interpolant.

    Using the interpolant's own derivative (rather than a filtered gradient
    image) keeps the Gauss-Newton Jacobian consistent with the sampled
    values, so finite differences reproduce it.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    tx = np.clip(np.asarray(x, dtype=np.float64) - 0.5, 0.0, w - 1.0)
    ty = np.clip(np.asarray(y, dtype=np.float64) - 0.5, 0.0, h - 1.0)
    x0 = np.minimum(tx.astype(int), w - 2)
    y0 = np.minimum(ty.astype(int), h - 2)
    fx = tx - x0
    fy = ty - y0
    i00 = img[y0, x0]
    i01 = img[y0, x0 + 1]
    i10 = img[y0 + 1, x0]
    i11 = img[y0 + 1, x0 + 1]
    val = i00 * (1 - fx) * (1 - fy) + i01 * fx * (1 - fy) + i10 * (1 - fx) * fy + i11 * fx * fy
    dx = (i01 - i00) * (1 - fy) + (i11 - i10) * fy
    dy = (i10 - i00) * (1 - fx) + (i11 - i01) * fx
    return val, dx, dy


@dataclass
class _Level:
    camera: PinholeCamera
    ref_grad: np.ndarray  # gradient magnitude of the prediction
    live_grad: np.ndarray  # gradient magnitude of the live image
    points: np.ndarray  # (N, 3) reference-camera points of valid pixels
    ref_values: np.ndarray  # (N,) reference gradient magnitudes


def build_levels(
    camera: PinholeCamera,
    live_grey: np.ndarray,
    ref_grey: np.ndarray,
    ref_depth: np.ndarray,
    ref_valid: np.ndarray,
    n_levels: int = N_LEVELS,
    use_gradient: bool = True,
) -> list[_Level]:
    """Coarse-to-fine pyramid (coarsest first). With `use_gradient` False the
    levels carry raw greyscale values instead (the A/B baseline objective)."""
    levels = []
    live, ref, depth, valid, cam = live_grey, ref_grey, ref_depth, ref_valid, camera
    for k in range(n_levels):
        ref_g = gradient_magnitude(ref) if use_gradient else ref
        live_g = gradient_magnitude(live) if use_gradient else live
        ok = valid & (depth > 0)
        pts = backproject_depth_map(cam, depth)[ok]
        levels.append(
            _Level(
                camera=cam,
                ref_grad=ref_g,
                live_grad=live_g,
                points=pts,
                ref_values=ref_g[ok],
            )
        )
        if k == n_levels - 1:
            break
        h, w = live.shape
        if h % 2 or w % 2:
            raise ValueError(
                f"image size {w}x{h} cannot be halved for level {k + 2} "
                f"of {n_levels}; use fewer levels"
            )
        live = _downsample_image(live)
        ref = _downsample_image(ref)
        depth, valid = _downsample_depth(depth, valid)
        cam = cam.scaled(0.5)
    return levels[::-1]


def photo_terms(level: _Level, rel: Pose, reject: float = REJECT_THRESHOLD, keep=None):
    """Residuals, Jacobian, and the accepted mask at a relative pose.

    `rel` maps reference-camera points into the live camera. Residual is
    ref_grad(x) - live_grad(warped x). `keep` freezes the accepted pixel set
    (used by the finite-difference check); by default pixels are re-gated:
    inside the live image and |r| <= reject.
    """
    cam = level.camera
    p = level.points @ rel.R.T + rel.t
    z = p[:, 2]
    front = z > 1e-6
    zs = np.where(front, z, 1.0)
    px = p[:, 0] / zs * cam.fx + cam.cx
    py = p[:, 1] / zs * cam.fy + cam.cy
    inside = (
        front
        & (px >= 0.5)
        & (px <= cam.width - 0.5)
        & (py >= 0.5)
        & (py <= cam.height - 0.5)
    )
    val, gx, gy = sample_with_grad(level.live_grad, px, py)
    r = level.ref_values - val
    if keep is None:
        keep = inside & (np.abs(r) <= reject)
    # chain rule: dr/dxi = -grad_live . dpi/dp . dp/dxi, xi = [w, v]
    fx, fy = cam.fx, cam.fy
    du = np.stack([gx * fx / zs, gy * fy / zs, -(gx * fx * p[:, 0] + gy * fy * p[:, 1]) / zs**2], axis=1)
    jac_v = -du
    jac_w = -np.cross(p, du)
    jac = np.hstack([jac_w, jac_v])
    return r[keep], jac[keep], keep


def _optimize_level(level: _Level, rel: Pose, reject: float, max_iter: int):
    costs = []
    r, _, keep = photo_terms(level, rel, reject)
    if len(r) < 6:
        return rel, costs, np.inf, 0
    cost = float(np.mean(r**2))
    costs.append(cost)
    n_valid = int(keep.sum())
    for _ in range(max_iter):
        r, jac, keep = photo_terms(level, rel, reject)
        if len(r) < 6:
            break
        a = jac.T @ jac
        b = -jac.T @ r
        try:
            step = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(a, b, rcond=1e-9)[0]
        trial = se3_exp(step).compose(rel)
        r_new, _, keep_new = photo_terms(level, trial, reject)
        if len(r_new) < 6:
            break
        cost_new = float(np.mean(r_new**2))
        if cost_new > cost:
            break  # rejected step ends the level
        rel = trial
        cost = cost_new
        n_valid = int(keep_new.sum())
        costs.append(cost)
        if np.linalg.norm(step) < STEP_TOL:
            break
    return rel, costs, cost, n_valid


def photometric_refine(
    camera: PinholeCamera,
    live_rgb: np.ndarray,
    prediction_rgb: np.ndarray,
    prediction_depth: np.ndarray,
    prediction_valid: np.ndarray,
    model_pose: Pose,
    init: Pose,
    reject: float = REJECT_THRESHOLD,
    n_levels: int = N_LEVELS,
    iters_per_level: int = ITERS_PER_LEVEL,
    objective: str = "gradient",
) -> RefineResult:
    """Refine an absolute live pose against a prediction rendered at model_pose.

    `objective` selects gradient-magnitude residuals ("gradient", default) or
    raw greyscale intensities ("intensity", for comparison studies). If the
    final finest-level cost exceeds the cost at the init pose the result is
    flagged diverged and the init pose is returned (callers keep their
    geometric estimate instead).
    """
    if objective not in ("gradient", "intensity"):
        raise ValueError("objective must be 'gradient' or 'intensity'")
    valid_fraction = float(np.mean(prediction_valid))
    if valid_fraction < MIN_VALID_FRACTION:
        raise PredictionCoverageError(
            f"prediction covers {valid_fraction:.0%} of the view (need >= 20%)"
        )
    live_grey = greyscale(live_rgb)
    ref_grey = greyscale(prediction_rgb)
    levels = build_levels(
        camera,
        live_grey,
        ref_grey,
        prediction_depth,
        prediction_valid,
        n_levels,
        use_gradient=objective == "gradient",
    )

    # rel warps reference-camera points into the live camera
    rel = init.inverse().compose(model_pose)
    r0, _, _ = photo_terms(levels[-1], rel, reject)
    init_cost = float(np.mean(r0**2)) if len(r0) else np.inf
    all_costs = []
    cost = np.inf
    n_valid = 0
    for level in levels:
        rel, costs, cost, n_valid = _optimize_level(level, rel, reject, iters_per_level)
        all_costs.append(costs)
    # coarse levels may drag the pose somewhere the full-resolution objective
    # dislikes; that counts as divergence and the caller keeps its init
    if cost > init_cost + 1e-12:
        return RefineResult(
            pose=init, cost=init_cost, n_valid=n_valid, diverged=True, level_costs=all_costs
        )
    return RefineResult(
        pose=model_pose.compose(rel.inverse()),
        cost=cost,
        n_valid=n_valid,
        diverged=False,
        level_costs=all_costs,
    )
