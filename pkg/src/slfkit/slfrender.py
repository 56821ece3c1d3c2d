"""Renders novel views of a reconstructed scene model.

The model is a diffuse texture atlas on a mesh plus one glossy lobe per
material segment; shading sums the sampled texture with the lobe integrated
against the environment map. The glossy term uses direct environment light
only: no shadowing or interreflection, those effects live in the baked
diffuse layer.
"""

from dataclasses import dataclass, field

import numpy as np

from .brdffit.ward import MaterialModel, TangentFrame, WardParams, ward_eval
from .envmap import EnvironmentMap
from .geometry.atlas import surface_to_atlas
from .geometry.camera import PinholeCamera
from .geometry.mesh import TriangleMesh
from .geometry.pose import Pose
from .imgio import bilinear_sample, linear_to_display, write_pfm, write_png
from .texfuse.atlas import TextureAtlas
from .texfuse.raster import rasterize

ENV_HEIGHT = 32  # environment rows used for the glossy integral
_PIXEL_CHUNK = 2048
_COVERAGE_EPS = 1e-9


@dataclass
class SlfModel:
    """Everything needed to shade a view: geometry, diffuse texture,
    per-segment gloss, and the light that drives the gloss."""

    mesh: TriangleMesh
    atlas: TextureAtlas
    labels: np.ndarray  # (n_vertices,) segment ids
    materials: dict[int, MaterialModel] = field(default_factory=dict)
    environment: EnvironmentMap | None = None
    env_height: int = ENV_HEIGHT

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != self.mesh.n_vertices:
            raise ValueError("one segment label per mesh vertex required")
        missing = set(np.unique(self.labels)) - set(self.materials)
        if missing:
            raise ValueError(f"segments without a material entry: {sorted(missing)}")


@dataclass
class RenderedView:
    rgb: np.ndarray  # (H, W, 3) linear
    diffuse: np.ndarray  # (H, W, 3) texture component
    specular: np.ndarray  # (H, W, 3) glossy component
    depth: np.ndarray  # (H, W), 0 where no surface
    coverage: np.ndarray  # (H, W) bool, surface hit AND atlas observed there
    segments: np.ndarray  # (H, W) segment id, -1 off-surface


def _integration_env(env: EnvironmentMap, env_height: int) -> EnvironmentMap:
    if env.height > env_height:
        return env.downsampled(env_height)
    return env


def eval_specular(
    normals,
    views,
    params: WardParams,
    env: EnvironmentMap,
    frame: TangentFrame | None = None,
    env_height: int = ENV_HEIGHT,
) -> np.ndarray:
    """Glossy radiance (P, 3) toward each view direction.

    Deterministic sum over every environment texel above the local horizon:
    radiance * lobe * cosine * solid angle. Quadratic cost in resolution, so
    the environment is first reduced to `env_height` rows.
    """
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    views = np.asarray(views, dtype=np.float64).reshape(-1, 3)
    if normals.shape != views.shape:
        raise ValueError("normals and views must pair up")
    if not params.isotropic and frame is None:
        raise ValueError("anisotropic evaluation needs a tangent frame")

    small = _integration_env(env, env_height)
    l_dirs = small.texel_directions().reshape(-1, 3)  # (T, 3)
    d_omega = small.texel_solid_angles().reshape(-1)  # (T,)
    radiance = small.radiance.reshape(-1, 3)  # (T, 3)

    tangent = binormal = None
    if frame is not None:
        t, b = frame.transported(normals)
        tangent, binormal = t[:, None, :], b[:, None, :]

    out = np.zeros((len(normals), 3))
    for lo in range(0, len(normals), _PIXEL_CHUNK):
        hi = min(lo + _PIXEL_CHUNK, len(normals))
        n = normals[lo:hi, None, :]
        v = views[lo:hi, None, :]
        tt = tangent[lo:hi] if tangent is not None else None
        bb = binormal[lo:hi] if binormal is not None else None
        fs = ward_eval(params, n, v, l_dirs[None, :, :], tt, bb)  # (p, T)
        cos_in = np.maximum(np.sum(n * l_dirs[None, :, :], axis=-1), 0.0)
        out[lo:hi] = (fs * cos_in * d_omega[None, :]) @ radiance
    return out


def render_view(model: SlfModel, camera: PinholeCamera, pose: Pose) -> RenderedView:
    """Shade one camera view of the model.

    Surface pixels without atlas coverage render with a zero diffuse term and
    are excluded from the coverage mask so evaluations can skip them.
    """
    h, w = camera.height, camera.width
    depth, face, bary = rasterize(model.mesh, camera, pose)
    hit = face >= 0

    diffuse = np.zeros((h, w, 3))
    specular = np.zeros((h, w, 3))
    segments = np.full((h, w), -1, dtype=np.int64)
    seen = np.zeros((h, w), dtype=bool)
    if not np.any(hit):
        return RenderedView(
            rgb=diffuse.copy(), diffuse=diffuse, specular=specular,
            depth=depth, coverage=seen, segments=segments,
        )

    f = face[hit]
    b = bary[hit]
    tri = model.mesh.faces[f]
    pts = np.einsum("pk,pkd->pd", b, model.mesh.vertices[tri])
    nrm = np.einsum("pk,pkd->pd", b, model.mesh.normals[tri])
    nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-12)

    # diffuse texture: normalized convolution so unobserved texels do not
    # darken their bilinear neighborhood
    size = model.atlas.size
    uv = surface_to_atlas(model.mesh, f, b)
    ax = uv[:, 0] * size
    ay = uv[:, 1] * size
    obs = model.atlas.observed_mask().astype(np.float64)
    cov = bilinear_sample(obs, ax, ay)
    col = bilinear_sample(model.atlas.rgb * obs[:, :, None], ax, ay)
    ok = cov > _COVERAGE_EPS
    col[ok] /= cov[ok][:, None]
    col[~ok] = 0.0
    diffuse[hit] = col
    seen[hit] = ok

    segments[hit] = model.labels[tri[np.arange(len(f)), np.argmax(b, axis=1)]]

    if model.environment is not None:
        views_dir = pose.t[None, :] - pts
        views_dir /= np.maximum(np.linalg.norm(views_dir, axis=1, keepdims=True), 1e-12)
        spec = np.zeros((len(pts), 3))
        seg_px = segments[hit]
        for seg in np.unique(seg_px):
            mat = model.materials[seg]
            if mat.diffuse_only or mat.params.rho_s <= 0:
                continue
            sel = seg_px == seg
            spec[sel] = eval_specular(
                nrm[sel], views_dir[sel], mat.params, model.environment,
                frame=mat.frame, env_height=model.env_height,
            )
        specular[hit] = spec

    return RenderedView(
        rgb=diffuse + specular, diffuse=diffuse, specular=specular,
        depth=depth, coverage=seen, segments=segments,
    )


def save_view(prefix, view: RenderedView) -> None:
    """Linear PFM plus a gamma-2.2 PNG preview and the coverage mask."""
    prefix = str(prefix)
    write_pfm(prefix + ".pfm", view.rgb.astype(np.float32))
    write_png(prefix + ".png", linear_to_display(np.clip(view.rgb, 0.0, 1.0)))
    write_png(prefix + "_coverage.png", view.coverage.astype(np.float64))
