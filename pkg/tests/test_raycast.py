"""Ray caster checked against a brute-force all-triangles reference."""

import numpy as np

from slfkit.geometry import TriangleMesh
from slfkit.raycast import RayMesh


def brute_force_hit(tri, o, d, t_min=1e-6):
    """Reference closest hit: scalar loop over every triangle."""
    best_t, best_f, best_b = np.inf, -1, np.zeros(3)
    for f in range(len(tri)):
        v0, v1, v2 = tri[f]
        e1, e2 = v1 - v0, v2 - v0
        pvec = np.cross(d, e2)
        det = e1 @ pvec
        if abs(det) < 1e-12:
            continue
        inv = 1.0 / det
        tvec = o - v0
        u = (tvec @ pvec) * inv
        if u < -1e-10 or u > 1 + 1e-10:
            continue
        qvec = np.cross(tvec, e1)
        v = (d @ qvec) * inv
        if v < -1e-10 or u + v > 1 + 1e-10:
            continue
        t = (e2 @ qvec) * inv
        if t_min <= t < best_t:
            best_t, best_f, best_b = t, f, np.array([1 - u - v, u, v])
    return best_t, best_f, best_b


def random_mesh(rng, n_faces=200):
    centers = rng.uniform(-1, 1, size=(n_faces, 3))
    offsets = rng.normal(scale=0.15, size=(n_faces, 3, 3))
    verts = (centers[:, None] + offsets).reshape(-1, 3)
    faces = np.arange(3 * n_faces).reshape(-1, 3)
    return TriangleMesh(vertices=verts, faces=faces)


def test_matches_brute_force_on_random_soup():
    rng = np.random.default_rng(42)
    mesh = random_mesh(rng)
    rm = RayMesh(mesh, leaf_size=16)
    tri = mesh.face_points()
    o = rng.uniform(-2, 2, size=(300, 3))
    d = rng.normal(size=(300, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    hits = rm.intersect(o, d)
    for r in range(300):
        t_ref, f_ref, b_ref = brute_force_hit(tri, o[r], d[r])
        if f_ref < 0:
            assert not hits.hit[r]
        else:
            assert hits.hit[r]
            assert abs(hits.t[r] - t_ref) < 1e-9
            # shared-edge hits may legitimately report either face
            if hits.face[r] == f_ref:
                assert np.abs(hits.bary[r] - b_ref).max() < 1e-9


def test_single_triangle_center_hit():
    mesh = TriangleMesh(
        vertices=[[0, 0, 1], [1, 0, 1], [0, 1, 1]], faces=[[0, 1, 2]]
    )
    rm = RayMesh(mesh)
    hits = rm.intersect([[1 / 3, 1 / 3, 0]], [[0, 0, 1]])
    assert hits.hit[0] and abs(hits.t[0] - 1.0) < 1e-12
    assert np.abs(hits.bary[0] - 1 / 3).max() < 1e-12


def test_backface_hits_count():
    mesh = TriangleMesh(
        vertices=[[0, 0, 1], [1, 0, 1], [0, 1, 1]], faces=[[0, 1, 2]]
    )
    rm = RayMesh(mesh)
    hits = rm.intersect([[0.2, 0.2, 2.0]], [[0, 0, -1]])
    assert hits.hit[0] and abs(hits.t[0] - 1.0) < 1e-12


def test_closest_of_stacked_triangles_wins():
    verts = []
    faces = []
    for k, z in enumerate([3.0, 1.0, 2.0]):
        verts += [[-1, -1, z], [3, -1, z], [-1, 3, z]]
        faces.append([3 * k, 3 * k + 1, 3 * k + 2])
    mesh = TriangleMesh(vertices=verts, faces=faces)
    rm = RayMesh(mesh, leaf_size=1)
    hits = rm.intersect([[0, 0, 0]], [[0, 0, 1]])
    assert hits.face[0] == 1 and abs(hits.t[0] - 1.0) < 1e-12


def test_t_max_per_ray_bounds_hits():
    mesh = TriangleMesh(
        vertices=[[-1, -1, 1], [3, -1, 1], [-1, 3, 1]], faces=[[0, 1, 2]]
    )
    rm = RayMesh(mesh)
    o = np.zeros((2, 3))
    d = np.tile([0.0, 0.0, 1.0], (2, 1))
    hits = rm.intersect(o, d, t_max=np.array([0.5, 2.0]))
    assert not hits.hit[0] and hits.hit[1]


def test_occlusion_blocked_by_wall():
    mesh = TriangleMesh(
        vertices=[[-5, -5, 0], [5, -5, 0], [-5, 5, 0], [5, 5, 0]],
        faces=[[0, 1, 3], [0, 3, 2]],
    )
    rm = RayMesh(mesh)
    o = np.array([[0, 0, -1.0], [6, 0, -1.0], [0, 0, 0.5]])
    g = np.array([[0, 0, 1.0], [6, 0, 1.0], [0, 0, 2.0]])
    blocked = rm.occluded(o, g)
    assert blocked.tolist() == [True, False, False]


def test_occlusion_endpoint_on_surface_not_self_blocked():
    mesh = TriangleMesh(
        vertices=[[-5, -5, 0], [5, -5, 0], [-5, 5, 0], [5, 5, 0]],
        faces=[[0, 1, 3], [0, 3, 2]],
    )
    rm = RayMesh(mesh)
    # segment from a surface point to a light above it: must not be blocked
    blocked = rm.occluded([[0.3, 0.2, 0.0]], [[0.5, 0.5, 3.0]])
    assert not blocked[0]
