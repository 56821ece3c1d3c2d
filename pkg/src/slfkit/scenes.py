"""Bundled synthetic scenes, mesh primitives, and capture trajectories.

Everything here is deterministic given its arguments (and an explicit seed
where noise textures are involved), so pipeline runs are reproducible.
"""

from __future__ import annotations

import numpy as np

from .brdffit import MaterialModel, TangentFrame, WardParams
from .envmap import EnvironmentMap, blob_environment, constant_environment
from .geometry import Pose, TriangleMesh, look_at, parameterize_atlas
from .sensorsim import GroundTruthScene, IrProjector, SceneMaterial

# -- mesh primitives ----------------------------------------------------------


def grid_plane(nx: int, ny: int, size_x=1.0, size_y=None, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Flat rectangle in the z=0 plane (normal +z), triangulated nx * ny * 2."""
    size_y = size_x if size_y is None else size_y
    xs = np.linspace(-size_x / 2, size_x / 2, nx + 1) + center[0]
    ys = np.linspace(-size_y / 2, size_y / 2, ny + 1) + center[1]
    gx, gy = np.meshgrid(xs, ys)
    verts = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, center[2])], axis=1)
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 1, a + nx + 2
            faces += [[a, b, d], [a, d, c]]
    normals = np.tile([0.0, 0.0, 1.0], (len(verts), 1))
    return TriangleMesh(vertices=verts, faces=np.asarray(faces), normals=normals)


def uv_sphere(radius=0.15, center=(0.0, 0.0, 0.0), n_lon=24, n_lat=12) -> TriangleMesh:
    """Latitude/longitude sphere with exact smooth normals."""
    center = np.asarray(center, dtype=np.float64)
    verts = [center + [0, 0, radius]]
    for j in range(1, n_lat):
        theta = np.pi * j / n_lat
        for i in range(n_lon):
            phi = 2 * np.pi * i / n_lon
            verts.append(
                center
                + radius
                * np.array(
                    [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
                )
            )
    verts.append(center + [0, 0, -radius])
    verts = np.asarray(verts)
    last = len(verts) - 1
    faces = []
    for i in range(n_lon):
        faces.append([0, 1 + i, 1 + (i + 1) % n_lon])
    for j in range(n_lat - 2):
        r0 = 1 + j * n_lon
        r1 = r0 + n_lon
        for i in range(n_lon):
            a, b = r0 + i, r0 + (i + 1) % n_lon
            c, d = r1 + i, r1 + (i + 1) % n_lon
            faces += [[a, c, b], [b, c, d]]
    r0 = 1 + (n_lat - 2) * n_lon
    for i in range(n_lon):
        faces.append([r0 + i, last, r0 + (i + 1) % n_lon])
    normals = (verts - center) / radius
    return TriangleMesh(vertices=verts, faces=np.asarray(faces), normals=normals)


def open_cylinder(
    radius=0.2, height=0.5, center=(0.0, 0.0, 0.0), n_seg=32, n_h=4, axis="z"
) -> TriangleMesh:
    """Side surface of a cylinder, smooth radial normals, axis along z or y."""
    center = np.asarray(center, dtype=np.float64)
    verts, normals = [], []
    for j in range(n_h + 1):
        z = height * (j / n_h - 0.5)
        for i in range(n_seg):
            phi = 2 * np.pi * i / n_seg
            p = np.array([radius * np.cos(phi), radius * np.sin(phi), z])
            n = np.array([np.cos(phi), np.sin(phi), 0.0])
            verts.append(p)
            normals.append(n)
    verts = np.asarray(verts)
    normals = np.asarray(normals)
    if axis == "y":
        swap = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=np.float64)
        verts = verts @ swap.T
        normals = normals @ swap.T
    verts = verts + center
    faces = []
    for j in range(n_h):
        r0, r1 = j * n_seg, (j + 1) * n_seg
        for i in range(n_seg):
            a, b = r0 + i, r0 + (i + 1) % n_seg
            c, d = r1 + i, r1 + (i + 1) % n_seg
            faces += [[a, b, d], [a, d, c]]
    return TriangleMesh(vertices=verts, faces=np.asarray(faces), normals=normals)


def box_mesh(size=(0.2, 0.2, 0.2), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with hard edges (duplicated corner vertices per face)."""
    sx, sy, sz = np.asarray(size, dtype=np.float64) / 2
    c = np.asarray(center, dtype=np.float64)
    verts, normals, faces = [], [], []
    for axis in range(3):
        for sign in (1.0, -1.0):
            n = np.zeros(3)
            n[axis] = sign
            u = np.zeros(3)
            u[(axis + 1) % 3] = 1.0
            v = np.cross(n, u)
            half = np.array([sx, sy, sz])
            base = len(verts)
            for du, dv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                verts.append(c + n * half + (u * du + v * dv) * half)
            normals += [n] * 4
            faces += [[base, base + 1, base + 2], [base, base + 2, base + 3]]
    return TriangleMesh(
        vertices=np.asarray(verts), faces=np.asarray(faces), normals=np.asarray(normals)
    )


def merge_meshes(parts: list[TriangleMesh]) -> tuple[TriangleMesh, np.ndarray]:
    """Concatenate meshes; returns the merged mesh and per-vertex part index."""
    verts, faces, normals, owner = [], [], [], []
    offset = 0
    for k, m in enumerate(parts):
        verts.append(m.vertices)
        normals.append(m.normals)
        faces.append(m.faces + offset)
        owner.append(np.full(m.n_vertices, k, dtype=np.int64))
        offset += m.n_vertices
    merged = TriangleMesh(
        vertices=np.vstack(verts), faces=np.vstack(faces), normals=np.vstack(normals)
    )
    return merged, np.concatenate(owner)


# -- trajectories --------------------------------------------------------------


def orbit_trajectory(
    n: int, radius=1.0, height=0.8, center=(0.0, 0.0, 0.0), sweep=2 * np.pi, start=0.0
) -> list[Pose]:
    """Cameras on a ring looking at `center`."""
    center = np.asarray(center, dtype=np.float64)
    poses = []
    for k in range(n):
        a = start + sweep * k / n
        eye = center + [radius * np.cos(a), radius * np.sin(a), height]
        poses.append(look_at(eye, center))
    return poses


def approach_trajectory(n: int, target=(0.0, 0.0, 0.0), d0=1.5, d1=0.6, tilt=0.5) -> list[Pose]:
    """Frontal poses closing in on a plane while swinging in elevation; gives
    the shading variation calibration needs."""
    target = np.asarray(target, dtype=np.float64)
    poses = []
    for k in range(n):
        f = k / max(n - 1, 1)
        d = d0 + (d1 - d0) * f
        ang = tilt * np.sin(2 * np.pi * f)
        side = tilt * np.cos(2 * np.pi * f) * 0.5
        eye = target + [d * np.sin(ang), d * np.sin(side), d * np.cos(ang) * np.cos(side)]
        poses.append(look_at(eye, target))
    return poses


# -- procedural albedo textures -------------------------------------------------


def checker_albedo(scene: GroundTruthScene, cell=0.08, colors=((0.9, 0.85, 0.8), (0.15, 0.2, 0.3))) -> np.ndarray:
    """World-space checkerboard sampled at texel surface points."""
    pts = scene.tables.points
    parity = (
        np.floor(pts[:, 0] / cell) + np.floor(pts[:, 1] / cell) + np.floor(pts[:, 2] / cell)
    ).astype(np.int64) % 2
    tex = np.zeros((scene.atlas_size * scene.atlas_size, 3))
    base = scene.texel_albedo()
    col = np.where(parity[:, None] == 0, np.asarray(colors[0]), np.asarray(colors[1]))
    # modulate the checker around each segment's base albedo so materials stay distinct
    tex[scene.tables.texel_ids] = base * (0.5 + col)
    return np.clip(tex.reshape(scene.atlas_size, scene.atlas_size, 3), 0.0, 1.0)


def noise_albedo(scene: GroundTruthScene, seed=0, grid=24, lo=0.2, hi=0.95) -> np.ndarray:
    """Smooth random blotches: low-res seeded grid, bilinearly upsampled over
    world xy coordinates. Gives dense image gradients for photometric tests."""
    from .imgio import bilinear_sample

    rng = np.random.default_rng(seed)
    coarse = rng.uniform(lo, hi, size=(grid, grid, 3))
    pts = scene.tables.points
    span = pts[:, :2].max(axis=0) - pts[:, :2].min(axis=0)
    span[span == 0] = 1.0
    xy = (pts[:, :2] - pts[:, :2].min(axis=0)) / span  # [0,1]^2
    vals = bilinear_sample(coarse, xy[:, 0] * grid, xy[:, 1] * grid)
    tex = np.zeros((scene.atlas_size * scene.atlas_size, 3))
    tex[scene.tables.texel_ids] = vals * scene.texel_albedo()
    return np.clip(tex.reshape(scene.atlas_size, scene.atlas_size, 3), 0.0, 1.0)


# -- material helpers -----------------------------------------------------------


def matte(segment: int, rgb, rho_ir: float) -> SceneMaterial:
    return SceneMaterial(
        model=MaterialModel(
            segment=segment,
            params=WardParams(rho_s=0.0, alpha_x=0.1),
            rho=rho_ir,
            diffuse_only=True,
        ),
        diffuse_rgb=rgb,
    )


def glossy(
    segment: int, rgb, rho_ir: float, rho_s: float, alpha_x: float,
    alpha_y: float | None = None, frame: TangentFrame | None = None,
) -> SceneMaterial:
    iso = alpha_y is None or alpha_y == alpha_x
    return SceneMaterial(
        model=MaterialModel(
            segment=segment,
            params=WardParams(
                rho_s=rho_s, alpha_x=alpha_x, alpha_y=alpha_y, isotropic=iso
            ),
            rho=rho_ir,
            frame=frame,
        ),
        diffuse_rgb=rgb,
    )


# -- bundled scenes ---------------------------------------------------------------


def default_environment(height=24, seed=0) -> EnvironmentMap:
    return blob_environment(
        height,
        [
            ([0.3, -0.5, 0.8], 0.35, [1.6, 1.5, 1.3]),
            ([-0.7, 0.4, 0.6], 0.5, [0.5, 0.55, 0.7]),
            ([0.8, 0.6, 0.2], 0.8, [0.25, 0.2, 0.15]),
        ],
        ambient=0.08,
    )


def default_projector(kappa=2.5, gamma=0.45) -> IrProjector:
    return IrProjector(kappa=kappa, gamma=gamma, offset=np.array([0.025, 0.0, 0.0]))


def white_target_scene(kappa=2.5, gamma=0.45, atlas_size=128) -> GroundTruthScene:
    """Unit-albedo matte plane for projector/gamma calibration."""
    mesh = grid_plane(4, 4, size_x=3.0)
    parameterize_atlas(mesh, atlas_size)
    return GroundTruthScene(
        mesh=mesh,
        labels=np.zeros(mesh.n_vertices, dtype=np.int64),
        materials={0: matte(0, rgb=(0.9, 0.9, 0.9), rho_ir=1.0)},
        environment=constant_environment(8, 0.5),
        projector=IrProjector(kappa=kappa, gamma=gamma),
        atlas_size=atlas_size,
        diffuse_shadows=False,
    )


def glossy_plane_scene(
    rho_s=0.4, alpha_x=0.1, alpha_y=None, rho_ir=0.3, frame: TangentFrame | None = None,
    atlas_size=128, albedo=(0.5, 0.45, 0.4), kappa=2.5, gamma=0.45,
) -> GroundTruthScene:
    """Single glossy plane: the reflectance-fitting testbed."""
    mesh = grid_plane(4, 4, size_x=2.0)
    parameterize_atlas(mesh, atlas_size)
    return GroundTruthScene(
        mesh=mesh,
        labels=np.zeros(mesh.n_vertices, dtype=np.int64),
        materials={
            0: glossy(0, albedo, rho_ir, rho_s, alpha_x, alpha_y, frame=frame)
        },
        environment=default_environment(),
        projector=default_projector(kappa, gamma),
        atlas_size=atlas_size,
        diffuse_shadows=False,
    )


def glossy_cylinder_scene(
    rho_s=0.4, alpha_x=0.1, alpha_y=None, rho_ir=0.3, frame: TangentFrame | None = None,
    atlas_size=128, kappa=2.5, gamma=0.45,
) -> GroundTruthScene:
    """Open cylinder (axis along y) with one glossy material; exercises
    tangent transport across curved geometry."""
    mesh = open_cylinder(radius=0.25, height=0.8, n_seg=48, n_h=6, axis="y")
    parameterize_atlas(mesh, atlas_size)
    return GroundTruthScene(
        mesh=mesh,
        labels=np.zeros(mesh.n_vertices, dtype=np.int64),
        materials={
            0: glossy(0, (0.5, 0.45, 0.4), rho_ir, rho_s, alpha_x, alpha_y, frame=frame)
        },
        environment=default_environment(),
        projector=default_projector(kappa, gamma),
        atlas_size=atlas_size,
        diffuse_shadows=False,
    )


def lambertian_scene(atlas_size=256, textured=True, seed=0) -> GroundTruthScene:
    """Textured matte plane plus a matte box: tracking and fusion testbed."""
    plane = grid_plane(6, 6, size_x=1.6)
    box = box_mesh(size=(0.25, 0.3, 0.22), center=(0.05, -0.05, 0.11))
    mesh, owner = merge_meshes([plane, box])
    parameterize_atlas(mesh, atlas_size)
    scene = GroundTruthScene(
        mesh=mesh,
        labels=owner,
        materials={
            0: matte(0, rgb=(0.75, 0.7, 0.65), rho_ir=0.8),
            1: matte(1, rgb=(0.35, 0.45, 0.6), rho_ir=0.5),
        },
        environment=default_environment(),
        projector=default_projector(),
        atlas_size=atlas_size,
    )
    if textured:
        scene.albedo_texture = noise_albedo(scene, seed=seed)
        scene._diffuse_texture = None
        scene._diffuse_filled = None
    return scene


def desk_scene(atlas_size=256, seed=0, glossy_alpha=0.15, glossy_rho_s=0.35) -> GroundTruthScene:
    """Desk-scale pipeline scene: textured matte ground, glossy sphere,
    matte box. Three materials, shadows on."""
    ground = grid_plane(6, 6, size_x=1.8)
    sphere = uv_sphere(radius=0.16, center=(-0.18, 0.1, 0.16), n_lon=24, n_lat=12)
    box = box_mesh(size=(0.24, 0.28, 0.2), center=(0.25, -0.12, 0.1))
    mesh, owner = merge_meshes([ground, sphere, box])
    parameterize_atlas(mesh, atlas_size)
    scene = GroundTruthScene(
        mesh=mesh,
        labels=owner,
        materials={
            0: matte(0, rgb=(0.7, 0.65, 0.6), rho_ir=0.75),
            1: glossy(1, (0.2, 0.22, 0.3), rho_ir=0.25, rho_s=glossy_rho_s, alpha_x=glossy_alpha),
            2: matte(2, rgb=(0.5, 0.35, 0.3), rho_ir=0.55),
        },
        environment=default_environment(),
        projector=default_projector(),
        atlas_size=atlas_size,
    )
    scene.albedo_texture = noise_albedo(scene, seed=seed)
    scene._diffuse_texture = None
    scene._diffuse_filled = None
    return scene
