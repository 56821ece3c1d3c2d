"""Ward BRDF evaluation: closed-form values, symmetries, tangent transport."""

import numpy as np
import pytest

from slfkit.brdffit import MaterialModel, TangentFrame, WardParams, ward_eval
from slfkit.geometry import rotation_about_axis

N = np.array([0.0, 0.0, 1.0])


def tilted(theta, phi=0.0):
    """Unit vector at polar angle theta from +z, azimuth phi."""
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


def test_peak_value_closed_form():
    # v = l = n, rho_s = 1, alpha = 0.1: peak is 1/(4*pi*alpha^2)
    p = WardParams(rho_s=1.0, alpha_x=0.1)
    val = ward_eval(p, N, N, N)
    assert abs(val - 1.0 / (4.0 * np.pi * 0.01)) < 1e-12
    assert abs(val - 7.957747154594767) < 1e-10


def test_lobe_drops_by_e_at_tan_theta_equals_alpha():
    alpha = 0.2
    p = WardParams(rho_s=1.0, alpha_x=alpha)
    theta = np.arctan(alpha)
    v = tilted(theta)
    # v = l puts the half vector at polar angle theta; remove the geometric
    # 1/sqrt((n.l)(n.v)) factor to isolate the exponential falloff
    val = ward_eval(p, N, v, v)
    lobe = val * np.cos(theta) * 4.0 * np.pi * alpha**2
    assert abs(lobe - np.exp(-1.0)) < 1e-12


def test_anisotropic_azimuth_ratio():
    ax, ay = 0.05, 0.3
    p = WardParams(rho_s=0.8, alpha_x=ax, alpha_y=ay, isotropic=False)
    t = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    theta = 0.05
    v_along_t = tilted(theta, 0.0)
    v_along_b = tilted(theta, np.pi / 2)
    f_t = ward_eval(p, N, v_along_t, v_along_t, tangent=t, binormal=b)
    f_b = ward_eval(p, N, v_along_b, v_along_b, tangent=t, binormal=b)
    want = np.exp(-np.tan(theta) ** 2 * (1.0 / ax**2 - 1.0 / ay**2))
    assert abs(f_t / f_b - want) < 1e-9


def test_helmholtz_reciprocity():
    rng = np.random.default_rng(9)
    p = WardParams(rho_s=0.5, alpha_x=0.15)
    for _ in range(50):
        v = tilted(rng.uniform(0, 1.2), rng.uniform(0, 2 * np.pi))
        l = tilted(rng.uniform(0, 1.2), rng.uniform(0, 2 * np.pi))
        assert ward_eval(p, N, v, l) == ward_eval(p, N, l, v)


def test_isotropic_rotation_invariance_about_normal():
    rng = np.random.default_rng(10)
    p = WardParams(rho_s=0.5, alpha_x=0.15)
    v = tilted(0.4, 0.3)
    l = tilted(0.7, 1.9)
    base = ward_eval(p, N, v, l)
    for _ in range(20):
        rot = rotation_about_axis(N, rng.uniform(0, 2 * np.pi))
        assert abs(ward_eval(p, N, rot @ v, rot @ l) - base) < 1e-9


def test_grazing_returns_zero():
    p = WardParams(rho_s=1.0, alpha_x=0.1)
    v = np.array([1.0, 0.0, 1e-9])
    v /= np.linalg.norm(v)
    assert ward_eval(p, N, v, N) == 0.0
    assert ward_eval(p, N, N, [1.0, 0.0, 0.0]) == 0.0


def test_nonnegative_everywhere():
    rng = np.random.default_rng(11)
    p = WardParams(rho_s=1.2, alpha_x=0.05, alpha_y=0.4, isotropic=False)
    t = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    v = np.stack([tilted(a, ph) for a, ph in rng.uniform(0, [1.5, 6.28], size=(200, 2))])
    l = np.stack([tilted(a, ph) for a, ph in rng.uniform(0, [1.5, 6.28], size=(200, 2))])
    n = np.tile(N, (200, 1))
    vals = ward_eval(p, n, v, l, tangent=np.tile(t, (200, 1)), binormal=np.tile(b, (200, 1)))
    assert np.all(vals >= 0.0)
    assert np.all(np.isfinite(vals))


def test_parameter_bounds_enforced():
    with pytest.raises(ValueError):
        WardParams(rho_s=-0.1, alpha_x=0.1)
    with pytest.raises(ValueError):
        WardParams(rho_s=2.0, alpha_x=0.1)
    with pytest.raises(ValueError):
        WardParams(rho_s=0.5, alpha_x=0.001)
    with pytest.raises(ValueError):
        WardParams(rho_s=0.5, alpha_x=0.1, alpha_y=0.2)  # isotropic default


def test_tangent_frame_validation_and_transport():
    with pytest.raises(ValueError):
        TangentFrame(tangent=[1, 0, 0], binormal=[1, 0, 0], normal=[0, 0, 1])
    frame = TangentFrame(tangent=[1, 0, 0], binormal=[0, 1, 0], normal=[0, 0, 1])
    # transport onto a tilted normal keeps the frame orthonormal and maps
    # the reference normal onto the target normal
    n_new = tilted(0.5, 1.0)
    t, b = frame.transported([n_new])
    assert abs(t[0] @ n_new) < 1e-12
    assert abs(b[0] @ n_new) < 1e-12
    assert abs(t[0] @ b[0]) < 1e-12
    assert abs(np.linalg.norm(t[0]) - 1) < 1e-12
    # identity transport is exact
    t0, b0 = frame.transported([N])
    assert np.allclose(t0[0], [1, 0, 0]) and np.allclose(b0[0], [0, 1, 0])


def test_material_model_json_round_trip():
    frame = TangentFrame(tangent=[1, 0, 0], binormal=[0, 1, 0], normal=[0, 0, 1])
    m = MaterialModel(
        segment=3,
        params=WardParams(rho_s=0.4, alpha_x=0.1),
        rho=0.3,
        frame=frame,
        rms=0.01,
    )
    back = MaterialModel.from_dict(m.to_dict())
    assert back.segment == 3
    assert back.params == m.params
    assert back.rho == 0.3
    assert np.allclose(back.frame.tangent, frame.tangent)
    assert back.tint == (1.0, 1.0, 1.0)
