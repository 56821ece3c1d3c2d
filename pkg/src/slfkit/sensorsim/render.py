"""Synthetic sensor frames: ray-cast depth, environment-lit RGB, active IR.

The RGB image is the sum of the scene's baked view-independent texture
(sampled at each pixel's surface point) and a per-pixel glossy term
integrated against the environment by stratified importance sampling of the
Ward lobe. The IR image is the closed-form point-source model. All sampling
is driven by a per-frame generator seeded from (seed, frame index), so
sequences are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import PinholeCamera, Pose, pixel_rays, surface_to_atlas
from ..imgio import bilinear_sample, read_pfm, write_pfm, write_png
from ..irmodel import ir_intensity
from ..brdffit.ward import WardParams, TangentFrame, ward_eval
from .scene import GroundTruthScene

_EPS_GEOM = 1e-9


@dataclass
class SensorFrame:
    depth: np.ndarray  # (H, W) meters, 0 where invalid
    rgb: np.ndarray  # (H, W, 3) linear [0, 1]
    ir: np.ndarray  # (H, W) [0, 1]
    pose: Pose  # camera-to-world at capture time
    index: int = 0

    def __post_init__(self):
        if self.depth.shape != self.rgb.shape[:2] or self.depth.shape != self.ir.shape:
            raise ValueError("depth, rgb, and ir must share dimensions")
        if np.any(self.depth < 0):
            raise ValueError("depth must be non-negative")


def _ward_lobe_directions(params: WardParams, k: int, jitter: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stratified half-vector samples of the Ward lobe, in the local frame.

    Returns (S, 3) unit half vectors with z along the normal, plus their
    z-components. With l mirrored about h, the estimator weight reduces to
    rho_s * (h.n)^3 * (v.h) * sqrt((n.l)/(n.v)).
    """
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    u1 = (i.ravel() + 1.0 - jitter[..., 0].ravel()) / k  # in (0, 1]
    u2 = (j.ravel() + jitter[..., 1].ravel()) / k
    ax, ay = params.alpha_x, params.alpha_y
    phi = np.arctan2(ay * np.sin(2 * np.pi * u2), ax * np.cos(2 * np.pi * u2))
    cp, sp = np.cos(phi), np.sin(phi)
    tan2 = -np.log(u1) / (cp**2 / ax**2 + sp**2 / ay**2)
    cos_t = 1.0 / np.sqrt(1.0 + tan2)
    sin_t = np.sqrt(np.maximum(1.0 - cos_t**2, 0.0))
    h_local = np.stack([sin_t * cp, sin_t * sp, cos_t], axis=1)
    return h_local, cos_t


def _specular_radiance(
    scene: GroundTruthScene,
    params: WardParams,
    frame: TangentFrame | None,
    normals: np.ndarray,
    views: np.ndarray,
    rng: np.random.Generator,
    spp: int,
    chunk: int = 4096,
) -> np.ndarray:
    """(P, 3) glossy radiance toward each view direction."""
    k = max(int(np.sqrt(spp)), 1)
    jitter = rng.uniform(size=(k, k, 2))
    h_local, hz = _ward_lobe_directions(params, k, jitter)
    if frame is not None:
        t, b = frame.transported(normals)
    else:
        # any stable tangent basis works for isotropic lobes
        helper = np.where(np.abs(normals[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
        t = np.cross(helper, normals)
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        b = np.cross(normals, t)
    env = scene.environment
    out = np.zeros((len(normals), 3))
    for s in range(0, len(normals), chunk):
        sl = slice(s, min(s + chunk, len(normals)))
        n_c, v_c, t_c, b_c = normals[sl], views[sl], t[sl], b[sl]
        # world half vectors: (C, S, 3)
        h = (
            t_c[:, None] * h_local[None, :, 0:1]
            + b_c[:, None] * h_local[None, :, 1:2]
            + n_c[:, None] * h_local[None, :, 2:3]
        )
        vh = np.einsum("csk,ck->cs", h, v_c)
        l = 2.0 * vh[:, :, None] * h - v_c[:, None]
        nl = np.einsum("csk,ck->cs", l, n_c)
        nv = np.maximum(np.einsum("ck,ck->c", n_c, v_c), _EPS_GEOM)
        ok = (nl > _EPS_GEOM) & (vh > _EPS_GEOM)
        w = np.where(
            ok,
            params.rho_s * hz[None, :] ** 3 * vh * np.sqrt(np.maximum(nl, 0.0) / nv[:, None]),
            0.0,
        )
        rad = env.sample(l.reshape(-1, 3)).reshape(l.shape)
        out[sl] = np.einsum("cs,csk->ck", w, rad) / (k * k)
    return out


def _speckle_mask(shape, period: int, rng: np.random.Generator) -> np.ndarray:
    """Binary dot mask with one lit pixel per period x period block."""
    h, w = shape
    mask = np.zeros((h + period, w + period), dtype=bool)
    by = np.arange(0, h + period, period)
    bx = np.arange(0, w + period, period)
    gy, gx = np.meshgrid(by, bx, indexing="ij")
    dy = rng.integers(period, size=gy.shape)
    dx = rng.integers(period, size=gx.shape)
    mask[gy + dy, gx + dx] = True
    return mask[:h, :w]


def render_frame(
    scene: GroundTruthScene,
    camera: PinholeCamera,
    pose: Pose,
    index: int = 0,
    spp: int = 256,
    seed: int = 0,
    rgb_noise: float = 0.0,
    ir_noise: float = 0.0,
    depth_noise: float = 0.0,
) -> SensorFrame:
    rng = np.random.default_rng([seed, index])
    h, w = camera.height, camera.width
    rays_cam = pixel_rays(camera).reshape(-1, 3)
    dirs = rays_cam @ pose.R.T
    origins = np.broadcast_to(pose.t, dirs.shape)
    hits = scene.raymesh.intersect(origins, dirs)
    hit = hits.hit
    depth = np.zeros(h * w)
    depth[hit] = hits.t[hit] * rays_cam[hit, 2]

    rgb = np.zeros((h * w, 3))
    ir = np.zeros(h * w)
    if hit.any():
        face = hits.face[hit]
        bary = hits.bary[hit]
        points = pose.t + hits.t[hit, None] * dirs[hit]
        normals = np.einsum(
            "nk,nkd->nd", bary, scene.mesh.normals[scene.mesh.faces[face]]
        )
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        to_cam = pose.t - points
        view_dist = np.linalg.norm(to_cam, axis=1)
        views = to_cam / view_dist[:, None]
        front = np.sum(normals * views, axis=1) > _EPS_GEOM

        # view-independent layer from the baked texture
        dtex = scene.diffuse_texture_filled()
        uv = surface_to_atlas(scene.mesh, face, bary) * scene.atlas_size
        rgb_hit = bilinear_sample(dtex, uv[:, 0], uv[:, 1])
        rgb_hit[~front] = 0.0

        # glossy layer per segment
        seg_of_face = scene.face_segments()
        seg = seg_of_face[face]
        for s, mat in scene.materials.items():
            params = mat.model.params
            if params.rho_s <= 0:
                continue
            m = (seg == s) & front
            if not m.any():
                continue
            rgb_hit[m] += _specular_radiance(
                scene, params, mat.model.frame, normals[m], views[m], rng, spp
            ) * np.asarray(mat.model.tint)

        # active IR: point source riding with the camera
        light = pose.apply(scene.projector.offset)
        to_light = light - points
        d_light = np.linalg.norm(to_light, axis=1)
        l_dirs = to_light / d_light[:, None]
        nl = np.sum(normals * l_dirs, axis=1)
        lit = front & (nl > _EPS_GEOM)
        ir_hit = np.zeros(len(points))
        if lit.any():
            rho = np.zeros(len(points))
            fs = np.zeros(len(points))
            for s, mat in scene.materials.items():
                m = (seg == s) & lit
                if not m.any():
                    continue
                rho[m] = mat.model.rho_scalar()
                params = mat.model.params
                if params.rho_s > 0:
                    if mat.model.frame is not None and not params.isotropic:
                        tm, bm = mat.model.frame.transported(normals[m])
                        fs[m] = ward_eval(
                            params, normals[m], views[m], l_dirs[m], tangent=tm, binormal=bm
                        )
                    else:
                        fs[m] = ward_eval(params, normals[m], views[m], l_dirs[m])
            ir_hit = np.where(
                lit,
                ir_intensity(
                    scene.projector.kappa, scene.projector.gamma, np.maximum(nl, 0.0),
                    d_light, rho=rho, f_s=fs,
                ),
                0.0,
            )
        rgb[hit] = rgb_hit
        ir[hit] = ir_hit

    depth = depth.reshape(h, w)
    rgb = rgb.reshape(h, w, 3)
    ir = ir.reshape(h, w)
    if scene.projector.mode == "speckle":
        ir = ir * _speckle_mask((h, w), scene.projector.speckle_period, rng)
    if rgb_noise > 0:
        rgb = rgb + rng.normal(scale=rgb_noise, size=rgb.shape)
    if ir_noise > 0:
        ir = ir + rng.normal(scale=ir_noise, size=ir.shape)
    if depth_noise > 0:
        noisy = depth + rng.normal(scale=depth_noise, size=depth.shape)
        depth = np.where(depth > 0, np.maximum(noisy, 1e-6), 0.0)
    return SensorFrame(
        depth=depth.astype(np.float32),
        rgb=np.clip(rgb, 0.0, 1.0).astype(np.float32),
        ir=np.clip(ir, 0.0, 1.0).astype(np.float32),
        pose=pose,
        index=index,
    )


def generate_sequence(
    scene: GroundTruthScene,
    camera: PinholeCamera,
    trajectory: list[Pose],
    spp: int = 256,
    seed: int = 0,
    rgb_noise: float = 0.0,
    ir_noise: float = 0.0,
    depth_noise: float = 0.0,
) -> list[SensorFrame]:
    if not trajectory:
        raise ValueError("trajectory must contain at least one pose")
    return [
        render_frame(
            scene, camera, pose, index=i, spp=spp, seed=seed,
            rgb_noise=rgb_noise, ir_noise=ir_noise, depth_noise=depth_noise,
        )
        for i, pose in enumerate(trajectory)
    ]


# -- sequence persistence ----------------------------------------------------


def save_sequence(directory, frames: list[SensorFrame], camera: PinholeCamera, previews: bool = True) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for f in frames:
        write_pfm(directory / f"rgb_{f.index:04d}.pfm", f.rgb)
        write_pfm(directory / f"depth_{f.index:04d}.pfm", f.depth)
        write_pfm(directory / f"ir_{f.index:04d}.pfm", f.ir)
        if previews:
            write_png(directory / f"rgb_{f.index:04d}.png", f.rgb)
    doc = {
        "camera": camera.to_dict(),
        "frames": [{"index": f.index, "pose": f.pose.to_dict()} for f in frames],
    }
    with open(directory / "sequence.json", "w") as fh:
        json.dump(doc, fh, indent=2)


def load_sequence(directory) -> tuple[list[SensorFrame], PinholeCamera]:
    directory = Path(directory)
    with open(directory / "sequence.json") as fh:
        doc = json.load(fh)
    camera = PinholeCamera.from_dict(doc["camera"])
    frames = []
    for rec in doc["frames"]:
        i = rec["index"]
        frames.append(
            SensorFrame(
                depth=read_pfm(directory / f"depth_{i:04d}.pfm"),
                rgb=read_pfm(directory / f"rgb_{i:04d}.pfm"),
                ir=read_pfm(directory / f"ir_{i:04d}.pfm"),
                pose=Pose.from_dict(rec["pose"]),
                index=i,
            )
        )
    return frames, camera
