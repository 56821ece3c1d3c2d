"""Projector/gamma calibration round trips against the forward model."""

import numpy as np
import pytest

from slfkit.ircalib import (
    CalibrationSamples,
    DegenerateSamplesError,
    IrCalibration,
    calibrate,
    predict,
)
from slfkit.irmodel import ir_intensity
from slfkit.lsq import levenberg_marquardt, numeric_jacobian


def make_samples(kappa, gamma, n, rng, noise=0.0):
    """Unsaturated forward-model observations spanning d in [0.5, 1.5]."""
    nl = np.empty(0)
    d = np.empty(0)
    while len(nl) < n:
        cand_nl = rng.uniform(0.05, 1.0, size=4 * n)
        cand_d = rng.uniform(0.5, 1.5, size=4 * n)
        L = ir_intensity(kappa, gamma, cand_nl, cand_d)
        keep = L < 0.999  # saturated pixels carry no gradient information
        nl = np.concatenate([nl, cand_nl[keep]])
        d = np.concatenate([d, cand_d[keep]])
    nl, d = nl[:n], d[:n]
    L = ir_intensity(kappa, gamma, nl, d)
    if noise > 0:
        L = np.clip(L + rng.normal(scale=noise, size=n), 0.0, 1.0)
    return CalibrationSamples(intensity=L, nl=nl, distance=d)


class TestPredict:
    def test_unit_configuration(self):
        calib = IrCalibration(kappa=np.pi, gamma=1.0, rms=0.0)
        assert predict(calib, 1.0, 1.0) == 1.0

    def test_zero_shading_gives_zero(self):
        calib = IrCalibration(kappa=np.pi, gamma=1.0, rms=0.0)
        assert predict(calib, 0.0, 1.0) == 0.0

    def test_inverse_square_through_gamma(self):
        calib = IrCalibration(kappa=2.0, gamma=0.7, rms=0.0)
        near = predict(calib, 0.5, 1.0)
        far = predict(calib, 0.5, 2.0)
        assert abs(far - near * 0.25**0.7) < 1e-12

    def test_monotone_in_shading_and_distance(self):
        calib = IrCalibration(kappa=1.5, gamma=0.6, rms=0.0)
        nl = np.linspace(0.05, 0.9, 50)
        vals = predict(calib, nl, 1.3)
        assert np.all(np.diff(vals) > 0)
        ds = np.linspace(0.6, 2.0, 50)
        vals_d = predict(calib, 0.7, ds)
        assert np.all(np.diff(vals_d) < 0)


class TestCalibrate:
    def test_identity_fixed_point(self):
        # kappa = pi, gamma = 1 makes L = (n.l)/d^2 exactly
        rng = np.random.default_rng(0)
        s = make_samples(np.pi, 1.0, 200, rng)
        calib = calibrate(s)
        assert abs(calib.kappa - np.pi) < 1e-6 * np.pi
        assert abs(calib.gamma - 1.0) < 1e-6

    def test_noiseless_round_trip(self):
        rng = np.random.default_rng(1)
        s = make_samples(2.5, 0.45, 500, rng)
        calib = calibrate(s)
        assert abs(calib.kappa - 2.5) / 2.5 < 1e-3
        assert abs(calib.gamma - 0.45) / 0.45 < 1e-3
        assert calib.rms < 1e-9

    def test_noisy_round_trip_20_seeds(self):
        errs = []
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            s = make_samples(2.5, 0.45, 500, rng, noise=0.01)
            calib = calibrate(s)
            errs.append(
                max(abs(calib.kappa - 2.5) / 2.5, abs(calib.gamma - 0.45) / 0.45)
            )
        assert max(errs) < 0.03

    def test_degenerate_shading_rejected(self):
        s = CalibrationSamples(
            intensity=np.full(10, 0.5), nl=np.full(10, 0.5), distance=np.full(10, 1.0)
        )
        with pytest.raises(DegenerateSamplesError):
            calibrate(s)

    def test_too_few_samples_rejected(self):
        s = CalibrationSamples(intensity=[0.5], nl=[0.5], distance=[1.0])
        with pytest.raises(DegenerateSamplesError):
            calibrate(s)

    def test_json_round_trip(self, tmp_path):
        calib = IrCalibration(kappa=2.5, gamma=0.45, rms=1e-4)
        p = tmp_path / "calib.json"
        calib.save(p)
        back = IrCalibration.load(p)
        assert back.kappa == calib.kappa and back.gamma == calib.gamma

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            IrCalibration(kappa=-1.0, gamma=0.5, rms=0.0)
        with pytest.raises(ValueError):
            IrCalibration(kappa=1.0, gamma=2.5, rms=0.0)
        with pytest.raises(ValueError):
            CalibrationSamples(intensity=[1.2], nl=[0.5], distance=[1.0])
        with pytest.raises(ValueError):
            CalibrationSamples(intensity=[0.5], nl=[0.0], distance=[1.0])


class TestSolver:
    def test_converges_on_smooth_bowl(self):
        target = np.array([1.5, -2.0])

        def resid(x):
            return np.array([x[0] - target[0], 3.0 * (x[1] - target[1]), x[0] * x[1] - target[0] * target[1]])

        res = levenberg_marquardt(resid, np.zeros(2))
        assert res.converged
        assert np.abs(res.x - target).max() < 1e-6

    def test_bounds_pin_solution_at_box_edge(self):
        def resid(x):
            return np.array([x[0] - 5.0])

        res = levenberg_marquardt(resid, np.array([0.5]), bounds=(np.array([0.0]), np.array([1.0])))
        assert abs(res.x[0] - 1.0) < 1e-12

    def test_numeric_jacobian_matches_analytic(self):
        def resid(x):
            return np.array([np.sin(x[0]) * x[1], x[0] ** 2 - x[1]])

        x = np.array([0.7, 1.3])
        num = numeric_jacobian(resid, x)
        ana = np.array(
            [[np.cos(x[0]) * x[1], np.sin(x[0])], [2 * x[0], -1.0]]
        )
        assert np.abs(num - ana).max() < 1e-8

    def test_zero_residual_converges_immediately(self):
        res = levenberg_marquardt(lambda x: np.zeros(3), np.array([1.0]))
        assert res.converged and res.n_iter == 0


class TestFrameCollection:
    def test_calibration_from_rendered_white_target(self):
        from slfkit.geometry import PinholeCamera
        from slfkit.ircalib import samples_from_frames
        from slfkit.scenes import approach_trajectory, white_target_scene
        from slfkit.sensorsim import generate_sequence

        kappa, gamma = 2.5, 0.45
        scene = white_target_scene(kappa=kappa, gamma=gamma)
        cam = PinholeCamera(width=256, height=256, fx=230.0, fy=230.0, cx=128.0, cy=128.0)
        frames = generate_sequence(scene, cam, approach_trajectory(4, d0=1.5, d1=0.7), spp=4)
        samples = samples_from_frames(frames, cam, scene.projector.offset)
        assert len(samples) > 2000
        assert samples.intensity.max() < 0.999
        calib = calibrate(samples)
        assert abs(calib.kappa - kappa) / kappa < 1e-3
        assert abs(calib.gamma - gamma) / gamma < 1e-3
        # frames are stored float32; geometry from depth carries that noise
        assert calib.rms < 1e-4
