"""Pose tracking tests.

Ground-truth poses from the simulator are the oracle throughout: alignment
must recover known perturbations. Jacobians of both objectives are checked
against finite differences with frozen pixel sets.
"""

import numpy as np
import pytest

from synth import perturb_pose, wavy_mesh
from slfkit.geometry.camera import PinholeCamera
from slfkit.geometry.pose import Pose, look_at, pose_error, se3_exp
from slfkit.scenes import (
    box_mesh,
    default_environment,
    default_projector,
    glossy,
    grid_plane,
    matte,
    merge_meshes,
    noise_albedo,
    open_cylinder,
    orbit_trajectory,
    uv_sphere,
)
from slfkit.sensorsim import GroundTruthScene, depth_normals, render_frame
from slfkit.texfuse import rasterize
from slfkit.tracking import (
    PredictionCoverageError,
    TrackingLostError,
    build_levels,
    gradient_magnitude,
    icp_align,
    icp_terms,
    load_trajectory,
    photo_terms,
    photometric_refine,
    save_trajectory,
)
from slfkit.geometry.atlas import parameterize_atlas
from slfkit.imgio import greyscale
from slfkit.tracking.photo import _downsample_depth, _downsample_image, sample_with_grad

CAM = PinholeCamera(fx=140.0, fy=140.0, cx=80.0, cy=60.0, width=160, height=120)


def bumpy_mesh():
    # curved surfaces pin the in-plane translation that a lone plane leaves free
    plane = grid_plane(4, 4, size_x=1.5)
    box = box_mesh(size=(0.3, 0.25, 0.2), center=(-0.25, -0.2, 0.1))
    sph = uv_sphere(radius=0.18, center=(0.25, 0.15, 0.18))
    cyl = open_cylinder(radius=0.1, height=0.35, center=(0.3, -0.35, 0.17))
    mesh, _ = merge_meshes([plane, box, sph, cyl])
    return mesh


def depth_view(mesh, pose):
    depth, _, _ = rasterize(mesh, CAM, pose)
    return depth


def textured_scene(glossy_material=False, atlas_size=256, seed=7):
    # a flat plane leaves rotation/translation nearly interchangeable in the
    # image; the height field breaks that ambiguity with depth parallax
    mesh = wavy_mesh()
    parameterize_atlas(mesh, atlas_size)
    if glossy_material:
        mat = glossy(0, rgb=(0.6, 0.55, 0.5), rho_ir=0.3, rho_s=0.6, alpha_x=0.08)
    else:
        mat = matte(0, rgb=(0.7, 0.65, 0.6), rho_ir=0.8)
    scene = GroundTruthScene(
        mesh=mesh,
        labels=np.zeros(mesh.n_vertices, dtype=np.int64),
        materials={0: mat},
        environment=default_environment(),
        projector=default_projector(),
        atlas_size=atlas_size,
        diffuse_shadows=False,
    )
    scene.albedo_texture = noise_albedo(scene, seed=seed)
    scene._diffuse_texture = None
    scene._diffuse_filled = None
    return scene


class TestIcp:
    def test_identical_views_stay_put(self):
        mesh = bumpy_mesh()
        pose = look_at(np.array([0.6, -0.5, 1.1]), np.zeros(3))
        depth = depth_view(mesh, pose)
        normals = depth_normals(CAM, depth)
        res = icp_align(CAM, depth, depth, normals, model_pose=pose, init=pose)
        rot, trans = pose_error(res.pose, pose)
        assert rot < 1e-6 and trans < 1e-6
        assert res.cost < 1e-16

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_recovers_small_offset(self, seed):
        mesh = bumpy_mesh()
        rng = np.random.default_rng(seed)
        model_pose = look_at(np.array([0.55, -0.5, 1.15]), np.zeros(3))
        live_pose = perturb_pose(model_pose, 1.0, 0.01, rng)
        model_depth = depth_view(mesh, model_pose)
        live_depth = depth_view(mesh, live_pose)
        normals = depth_normals(CAM, model_depth)
        res = icp_align(CAM, live_depth, model_depth, normals, model_pose=model_pose)
        rot, trans = pose_error(res.pose, live_pose)
        assert rot < 0.08
        assert trans < 1e-3
        assert not res.rank_deficient

    def test_planar_scene_flags_rank_deficiency(self):
        mesh = grid_plane(4, 4, size_x=2.5)
        model_pose = look_at(np.array([0.0, 0.0, 1.2]), np.zeros(3))
        live_pose = Pose(model_pose.R, model_pose.t + np.array([0.0, 0.0, 0.01]))
        model_depth = depth_view(mesh, model_pose)
        live_depth = depth_view(mesh, live_pose)
        normals = depth_normals(CAM, model_depth)
        res = icp_align(CAM, live_depth, model_depth, normals, model_pose=model_pose)
        assert res.rank_deficient
        # the constrained DOF (normal direction + in-plane rotations) recover
        rot, trans = pose_error(res.pose, live_pose)
        assert rot < 0.05
        assert trans < 1e-3

    def test_tracking_lost_on_empty_depth(self):
        mesh = bumpy_mesh()
        pose = look_at(np.array([0.6, -0.5, 1.1]), np.zeros(3))
        depth = depth_view(mesh, pose)
        normals = depth_normals(CAM, depth)
        with pytest.raises(TrackingLostError):
            icp_align(CAM, np.zeros_like(depth), depth, normals, model_pose=pose)

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        p = rng.normal(size=(50, 3)) + [0, 0, 2.0]
        q = p + rng.normal(0, 0.01, (50, 3))
        n = rng.normal(size=(50, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        r0, jac = icp_terms(p, q, n)
        eps = 1e-7
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = eps
            plus = se3_exp(xi)
            minus = se3_exp(-xi)
            rp, _ = icp_terms(p @ plus.R.T + plus.t, q, n)
            rm, _ = icp_terms(p @ minus.R.T + minus.t, q, n)
            fd = (rp - rm) / (2 * eps)
            assert np.max(np.abs(fd - jac[:, k])) < 1e-6


class TestPyramid:
    def test_downsample_preserves_constant(self):
        img = np.full((12, 16), 0.37)
        out = _downsample_image(img)
        assert out.shape == (6, 8)
        assert np.allclose(out, 0.37)

    def test_downsample_depth_blocks(self):
        depth = np.full((8, 8), 2.0)
        valid = np.ones((8, 8), dtype=bool)
        depth[3, 3] = 0.0
        valid[3, 3] = False
        d2, v2 = _downsample_depth(depth, valid)
        assert d2.shape == (4, 4)
        assert not v2[1, 1] and d2[1, 1] == 0.0
        assert v2[0, 0] and d2[0, 0] == 2.0

    def test_level_structure(self):
        rng = np.random.default_rng(0)
        live = rng.random((120, 160))
        ref = rng.random((120, 160))
        depth = np.full((120, 160), 1.5)
        valid = np.ones((120, 160), dtype=bool)
        levels = build_levels(CAM, live, ref, depth, valid)
        assert [lv.camera.width for lv in levels] == [40, 80, 160]
        assert levels[-1].ref_grad.shape == (120, 160)
        assert len(levels[0].points) == 40 * 30

    def test_odd_dimension_halving_rejected(self):
        rng = np.random.default_rng(0)
        live = rng.random((120, 160))
        depth = np.full((120, 160), 1.5)
        valid = np.ones((120, 160), dtype=bool)
        # 120 -> 60 -> 30 -> 15 cannot halve a fifth time
        with pytest.raises(ValueError, match="fewer levels"):
            build_levels(CAM, live, live, depth, valid, n_levels=5)

    def test_gradient_magnitude_step_edge(self):
        img = np.zeros((8, 8))
        img[:, 4:] = 1.0
        g = gradient_magnitude(img)
        assert g[4, 4] == pytest.approx(0.5)  # unit step reads 0.5
        assert g[4, 1] == 0.0

    def test_sample_with_grad_matches_plane(self):
        # an image that is linear in x and y has constant analytic gradients
        ys, xs = np.mgrid[0:8, 0:10]
        img = 0.3 * xs + 0.2 * ys
        val, gx, gy = sample_with_grad(img, np.array([4.3]), np.array([3.7]))
        assert val[0] == pytest.approx(0.3 * (4.3 - 0.5) + 0.2 * (3.7 - 0.5))
        assert gx[0] == pytest.approx(0.3)
        assert gy[0] == pytest.approx(0.2)


class TestPhotometric:
    def test_identity_fixed_point(self):
        scene = textured_scene()
        pose = look_at(np.array([0.1, -0.15, 1.2]), np.zeros(3))
        frame = render_frame(scene, CAM, pose)
        res = photometric_refine(
            CAM, frame.rgb, frame.rgb, frame.depth, frame.depth > 0, pose, pose
        )
        rot, trans = pose_error(res.pose, pose)
        assert rot < 1e-8 and trans < 1e-8
        assert res.cost < 1e-14
        assert not res.diverged

    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_refines_perturbed_init(self, seed):
        # the prediction is rendered at the frame's true pose (the tracking
        # oracle); only the initialization is wrong by 2 degrees / 2 cm
        scene = textured_scene()
        true_pose = look_at(np.array([0.15, -0.2, 1.3]), np.zeros(3))
        live = render_frame(scene, CAM, true_pose, index=0)
        pred = render_frame(scene, CAM, true_pose, index=1)
        rng = np.random.default_rng(300 + seed)
        init = perturb_pose(true_pose, 2.0, 0.02, rng)
        res = photometric_refine(
            CAM, live.rgb, pred.rgb, pred.depth, pred.depth > 0,
            true_pose, init, n_levels=4,
        )
        rot, trans = pose_error(res.pose, true_pose)
        assert not res.diverged
        assert rot < 0.2  # 10x better than the 2 degree init
        assert trans < 2e-3  # 10x better than the 2 cm init
        for costs in res.level_costs:
            assert all(b <= a + 1e-15 for a, b in zip(costs, costs[1:]))

    def test_fourth_level_needed_for_large_basin(self):
        # seed 307's perturbation direction escapes the 3-level basin; the
        # extra pyramid level recovers it (kept as a regression anchor)
        scene = textured_scene()
        true_pose = look_at(np.array([0.15, -0.2, 1.3]), np.zeros(3))
        live = render_frame(scene, CAM, true_pose, index=0)
        pred = render_frame(scene, CAM, true_pose, index=1)
        init = perturb_pose(true_pose, 2.0, 0.02, np.random.default_rng(307))
        res4 = photometric_refine(
            CAM, live.rgb, pred.rgb, pred.depth, pred.depth > 0,
            true_pose, init, n_levels=4,
        )
        rot, trans = pose_error(res4.pose, true_pose)
        assert rot < 0.2 and trans < 2e-3

    def test_gradient_beats_intensity_on_specular_scene(self):
        scene = textured_scene(glossy_material=True)
        poses = orbit_trajectory(12, radius=0.4, height=1.2, sweep=0.5)
        model_pose, live_pose = poses[0], poses[1]
        model = render_frame(scene, CAM, model_pose, spp=64)
        live = render_frame(scene, CAM, live_pose, spp=64, index=1)
        errs = {"gradient": [], "intensity": []}
        for seed in range(4):
            rng = np.random.default_rng(200 + seed)
            init = perturb_pose(live_pose, 1.0, 0.01, rng)
            for objective in errs:
                res = photometric_refine(
                    CAM,
                    live.rgb,
                    model.rgb,
                    model.depth,
                    model.depth > 0,
                    model_pose,
                    init,
                    n_levels=4,
                    objective=objective,
                )
                rot, trans = pose_error(res.pose, live_pose)
                errs[objective].append(rot + 100.0 * trans)
        assert np.mean(errs["gradient"]) < np.mean(errs["intensity"])

    def test_additive_offset_invariance(self):
        scene = textured_scene()
        poses = orbit_trajectory(12, radius=0.35, height=1.25, sweep=0.6)
        model = render_frame(scene, CAM, poses[0])
        live = render_frame(scene, CAM, poses[1])
        rng = np.random.default_rng(11)
        init = perturb_pose(poses[1], 1.0, 0.01, rng)
        base = photometric_refine(
            CAM, live.rgb, model.rgb, model.depth, model.depth > 0, poses[0], init
        )
        shifted = photometric_refine(
            CAM,
            live.rgb + 0.05,
            model.rgb + 0.05,
            model.depth,
            model.depth > 0,
            poses[0],
            init,
        )
        rot, trans = pose_error(shifted.pose, base.pose)
        assert rot < 1e-7 and trans < 1e-9

    def test_low_coverage_rejected(self):
        scene = textured_scene()
        pose = look_at(np.array([0.1, -0.15, 1.2]), np.zeros(3))
        frame = render_frame(scene, CAM, pose)
        sparse = np.zeros_like(frame.depth, dtype=bool)
        sparse[:10, :10] = True
        with pytest.raises(PredictionCoverageError):
            photometric_refine(
                CAM, frame.rgb, frame.rgb, frame.depth, sparse, pose, pose
            )

    def test_jacobian_matches_finite_differences(self):
        scene = textured_scene()
        poses = orbit_trajectory(12, radius=0.35, height=1.25, sweep=0.6)
        model = render_frame(scene, CAM, poses[0])
        live = render_frame(scene, CAM, poses[1])
        levels = build_levels(
            CAM,
            greyscale(live.rgb),
            greyscale(model.rgb),
            model.depth,
            model.depth > 0,
        )
        level = levels[-1]
        rng = np.random.default_rng(5)
        rel = perturb_pose(poses[1].inverse().compose(poses[0]), 0.5, 0.005, rng)
        r0, jac, keep = photo_terms(level, rel)
        # freeze the pixel set and avoid bilinear cell crossings
        p = level.points @ rel.R.T + rel.t
        px = p[:, 0] / p[:, 2] * level.camera.fx + level.camera.cx
        py = p[:, 1] / p[:, 2] * level.camera.fy + level.camera.cy
        # bilinear interpolation kinks at integer array coords (px - 0.5);
        # keep only rows a safe distance away so central differences are clean
        dist_x = 0.5 - np.abs((px - 0.5) % 1.0 - 0.5)
        dist_y = 0.5 - np.abs((py - 0.5) % 1.0 - 0.5)
        interior = keep & (dist_x > 5e-3) & (dist_y > 5e-3)
        r0, jac, _ = photo_terms(level, rel, keep=interior)
        eps = 1e-6
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = eps
            rp, _, _ = photo_terms(level, se3_exp(xi).compose(rel), keep=interior)
            rm, _, _ = photo_terms(level, se3_exp(-xi).compose(rel), keep=interior)
            fd = (rp - rm) / (2 * eps)
            scale = max(1.0, np.abs(jac[:, k]).max())
            assert np.max(np.abs(fd - jac[:, k])) / scale < 1e-4


class TestTrajectoryIo:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(4)
        poses = [perturb_pose(Pose.identity(), 20.0, 1.0, rng) for _ in range(3)]
        path = tmp_path / "traj.jsonl"
        save_trajectory(path, poses, frame_ids=[0, 2, 5])
        ids, back = load_trajectory(path)
        assert ids == [0, 2, 5]
        for a, b in zip(poses, back):
            assert np.allclose(a.R, b.R, atol=1e-15)
            assert np.allclose(a.t, b.t, atol=1e-15)
        assert len(path.read_text().strip().splitlines()) == 3
