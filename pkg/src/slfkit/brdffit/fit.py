"""Per-segment reflectance estimation from sparse active-IR observations.

Each material segment gets a single glossy lobe (shared parameters) plus an
IR diffuse albedo, estimated by damped least squares against the sensor's
forward model L = (kappa * (n.l)/d^2 * (rho/pi + f_s))^gamma. The diffuse
albedo is either one scalar for the segment or one value per atlas texel; in
the per-texel mode each albedo has a closed-form conditional optimum given
the lobe, so the normal equations stay lobe-sized (variable projection).
"""

from __future__ import annotations

import numpy as np

from ..ircalib import IrCalibration
from ..lsq import LMResult, levenberg_marquardt
from .samples import IrSamples
from .ward import (
    ALPHA_MAX,
    ALPHA_MIN,
    RHO_S_MAX,
    MaterialModel,
    TangentFrame,
    WardParams,
)

MIN_SAMPLES = 20
RHO_MAX = 2.0  # IR albedo upper bound; physical surfaces stay below 1
SPECULAR_HALF_ANGLE = np.deg2rad(60.0)  # beyond this the lobe is unconstrained
_P_FLOOR = 1e-12  # model argument floor; gamma < 1 has infinite slope at 0


class FitError(ValueError):
    pass


def _lobe_terms(samples: IrSamples, frame: TangentFrame | None, alpha_x, alpha_y):
    """Unit-albedo lobe value and its log-roughness derivative factors.

    Returns (f_unit, dx, dy) with d f/d log(alpha_x) = f * dx etc.; the lobe
    is linear in rho_s, so f = rho_s * f_unit.
    """
    n, v, l, h = samples.n, samples.v, samples.l, samples.h
    if frame is not None:
        t, b = frame.transported(n)
    else:
        helper = np.where(np.abs(n[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
        t = np.cross(helper, n)
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        b = np.cross(n, t)
    hn2 = np.maximum(np.sum(h * n, axis=1), 1e-6) ** 2
    ex = (np.sum(h * t, axis=1) / alpha_x) ** 2 / hn2
    ey = (np.sum(h * b, axis=1) / alpha_y) ** 2 / hn2
    nlnv = samples.nl() * samples.nv()
    f_unit = np.where(
        nlnv < 1e-8,
        0.0,
        np.exp(-(ex + ey)) / (4 * np.pi * alpha_x * alpha_y * np.sqrt(np.maximum(nlnv, 1e-8))),
    )
    return f_unit, 2 * ex - 1.0, 2 * ey - 1.0


def _alphas(x, isotropic):
    if isotropic:
        return np.exp(x[2]), np.exp(x[2])
    return np.exp(x[2]), np.exp(x[3])


def residual_and_jacobian(
    x: np.ndarray,
    samples: IrSamples,
    calib: IrCalibration,
    isotropic: bool = True,
    frame: TangentFrame | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals L - model and their analytic Jacobian.

    Parameter vector: [rho, rho_s, log alpha_x] or
    [rho, rho_s, log alpha_x, log alpha_y].
    """
    rho, rho_s = x[0], x[1]
    ax, ay = _alphas(x, isotropic)
    a = calib.kappa * samples.nl() / samples.d**2
    f_unit, dx, dy = _lobe_terms(samples, frame, ax, ay)
    p = np.maximum(a * (rho / np.pi + rho_s * f_unit), _P_FLOOR)
    g = calib.gamma
    model = p**g
    c = g * p ** (g - 1.0) * a
    jac = np.empty((len(p), len(x)))
    jac[:, 0] = -c / np.pi
    jac[:, 1] = -c * f_unit
    if isotropic:
        jac[:, 2] = -c * rho_s * f_unit * (dx + dy)
    else:
        jac[:, 2] = -c * rho_s * f_unit * dx
        jac[:, 3] = -c * rho_s * f_unit * dy
    return samples.intensity - model, jac


def predict_intensity(
    model: MaterialModel, samples: IrSamples, calib: IrCalibration
) -> np.ndarray:
    """Forward model for fitted reflectance at the samples' geometry."""
    a = calib.kappa * samples.nl() / samples.d**2
    if model.diffuse_only or model.params.rho_s <= 0:
        f = np.zeros(len(samples))
    else:
        f_unit, _, _ = _lobe_terms(
            samples, model.frame, model.params.alpha_x, model.params.alpha_y
        )
        f = model.params.rho_s * f_unit
    rho = model.rho
    if isinstance(rho, np.ndarray) and model.rho_texels is not None:
        lut = dict(zip(model.rho_texels.tolist(), rho.tolist()))
        rho = np.array([lut.get(t, float(np.mean(model.rho))) for t in samples.texel])
    return np.clip(np.maximum(a * (rho / np.pi + f), 0.0) ** calib.gamma, 0.0, 1.0)


def _fit_diffuse_only(samples, calib, segment) -> MaterialModel:
    def res(x):
        a = calib.kappa * samples.nl() / samples.d**2
        p = np.maximum(a * x[0] / np.pi, _P_FLOOR)
        return samples.intensity - p**calib.gamma

    def jac(x):
        a = calib.kappa * samples.nl() / samples.d**2
        p = np.maximum(a * x[0] / np.pi, _P_FLOOR)
        return (-calib.gamma * p ** (calib.gamma - 1.0) * a / np.pi)[:, None]

    r = levenberg_marquardt(res, [0.5], jacobian_fn=jac, bounds=([0.0], [RHO_MAX]))
    return MaterialModel(
        segment=segment,
        params=WardParams(rho_s=0.0, alpha_x=0.1),
        rho=float(r.x[0]),
        rms=r.rms,
        diffuse_only=True,
        converged=r.converged,
    )


def _solve_per_texel_rho(samples, calib, rho_s, f_unit, bins, n_bins):
    """Conditional optimum of each texel's albedo given the lobe.

    In the de-gamma'd domain the model is linear in rho:
    L^(1/gamma) = a*(rho/pi + f), a = kappa*(n.l)/d^2, giving the per-bin
    least-squares solution rho = pi * sum(a*(y - a*f)) / sum(a^2).
    """
    a = calib.kappa * samples.nl() / samples.d**2
    y = np.maximum(samples.intensity, 0.0) ** (1.0 / calib.gamma)
    num = np.bincount(bins, weights=a * (y - a * rho_s * f_unit), minlength=n_bins)
    den = np.bincount(bins, weights=a * a, minlength=n_bins)
    return np.clip(np.pi * num / np.maximum(den, 1e-12), 0.0, RHO_MAX)


def fit_segment(
    samples: IrSamples,
    calib: IrCalibration,
    mode: str = "constant",
    isotropic: bool = True,
    frame: TangentFrame | None = None,
    segment: int | None = None,
    alpha_starts=(0.05, 0.1, 0.3),
    saturation: float = 0.999,
) -> MaterialModel:
    """Estimate one segment's glossy lobe and IR diffuse albedo.

    `mode` is "constant" (one albedo scalar) or "per-texel" (one albedo per
    observed atlas texel, requiring texel attribution and >= 2 source
    frames). Anisotropic fits need `frame` for the shared tangent direction.
    Runs one damped-least-squares solve per roughness start and keeps the
    lowest-cost result.
    """
    if mode not in ("constant", "per-texel"):
        raise FitError(f"unknown fit mode: {mode}")
    if not isotropic and frame is None:
        raise FitError("anisotropic fit needs a tangent frame")
    keep = samples.intensity < saturation
    if not keep.all():
        samples = samples.subset(keep)
    if len(samples) < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} usable samples, got {len(samples)}")
    if segment is None:
        segment = int(samples.segment[0]) if len(samples) else 0

    if samples.half_angles().min() > SPECULAR_HALF_ANGLE:
        # every observation sits far off the lobe peak: the glossy
        # parameters are unconstrained, keep the diffuse explanation
        return _fit_diffuse_only(samples, calib, segment)

    if mode == "per-texel":
        if np.any(samples.texel < 0):
            raise FitError("per-texel albedo needs texel attribution on every sample")
        if len(np.unique(samples.frame_id)) < 2:
            raise FitError("per-texel albedo needs samples from at least 2 frames")
        return _fit_per_texel(samples, calib, isotropic, frame, segment, alpha_starts)

    lo = [0.0, 0.0, np.log(ALPHA_MIN)]
    hi = [RHO_MAX, RHO_S_MAX, np.log(ALPHA_MAX)]
    if not isotropic:
        lo.append(np.log(ALPHA_MIN))
        hi.append(np.log(ALPHA_MAX))
    bounds = (np.array(lo), np.array(hi))

    def res(x):
        return residual_and_jacobian(x, samples, calib, isotropic, frame)[0]

    def jac(x):
        return residual_and_jacobian(x, samples, calib, isotropic, frame)[1]

    rho0 = _initial_rho(samples, calib)
    best: LMResult | None = None
    for a0 in alpha_starts:
        x0 = [rho0, 0.1, np.log(a0)] + ([np.log(a0)] if not isotropic else [])
        r = levenberg_marquardt(res, x0, jacobian_fn=jac, bounds=bounds)
        if best is None or r.cost < best.cost:
            best = r
    ax, ay = _alphas(best.x, isotropic)
    rho_s = float(best.x[1])
    if rho_s < 1e-6:
        rho_s = 0.0  # lobe vanished against the bound: report a clean zero
    return MaterialModel(
        segment=segment,
        params=WardParams(rho_s=rho_s, alpha_x=ax, alpha_y=ay, isotropic=isotropic),
        rho=float(best.x[0]),
        frame=frame,
        rms=best.rms,
        converged=best.converged,
    )


def _initial_rho(samples, calib) -> float:
    """Albedo start from the least-specular half of the samples."""
    theta = samples.half_angles()
    off_peak = theta >= np.median(theta)
    a = calib.kappa * samples.nl()[off_peak] / samples.d[off_peak] ** 2
    y = np.maximum(samples.intensity[off_peak], 0.0) ** (1.0 / calib.gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.pi * y / a
    est = est[np.isfinite(est)]
    if len(est) == 0:
        return 0.5
    return float(np.clip(np.median(est), 0.01, RHO_MAX))


def _fit_per_texel(samples, calib, isotropic, frame, segment, alpha_starts):
    texels, bins = np.unique(samples.texel, return_inverse=True)
    n_bins = len(texels)

    def split(x):
        rho_s = x[0]
        ax, ay = (np.exp(x[1]), np.exp(x[1])) if isotropic else (np.exp(x[1]), np.exp(x[2]))
        return rho_s, ax, ay

    def rho_for(x):
        rho_s, ax, ay = split(x)
        f_unit, _, _ = _lobe_terms(samples, frame, ax, ay)
        return _solve_per_texel_rho(samples, calib, rho_s, f_unit, bins, n_bins), f_unit

    def res(x):
        rho_s, ax, ay = split(x)
        rho_b, f_unit = rho_for(x)
        a = calib.kappa * samples.nl() / samples.d**2
        p = np.maximum(a * (rho_b[bins] / np.pi + rho_s * f_unit), _P_FLOOR)
        return samples.intensity - p**calib.gamma

    def jac(x):
        # albedos are treated as fixed at their conditional optimum for the
        # step computation; the re-projection happens inside res()
        rho_s, ax, ay = split(x)
        rho_b, f_unit = rho_for(x)
        f2, dx, dy = _lobe_terms(samples, frame, ax, ay)
        a = calib.kappa * samples.nl() / samples.d**2
        p = np.maximum(a * (rho_b[bins] / np.pi + rho_s * f_unit), _P_FLOOR)
        c = calib.gamma * p ** (calib.gamma - 1.0) * a
        out = np.empty((len(p), len(x)))
        out[:, 0] = -c * f_unit
        if isotropic:
            out[:, 1] = -c * rho_s * f_unit * (dx + dy)
        else:
            out[:, 1] = -c * rho_s * f_unit * dx
            out[:, 2] = -c * rho_s * f_unit * dy
        return out

    lo = [0.0, np.log(ALPHA_MIN)] + ([] if isotropic else [np.log(ALPHA_MIN)])
    hi = [RHO_S_MAX, np.log(ALPHA_MAX)] + ([] if isotropic else [np.log(ALPHA_MAX)])
    best = None
    for a0 in alpha_starts:
        x0 = [0.1, np.log(a0)] + ([] if isotropic else [np.log(a0)])
        r = levenberg_marquardt(res, x0, jacobian_fn=jac, bounds=(np.array(lo), np.array(hi)))
        if best is None or r.cost < best.cost:
            best = r
    rho_s, ax, ay = split(best.x)
    rho_b, _ = rho_for(best.x)
    return MaterialModel(
        segment=segment,
        params=WardParams(rho_s=float(rho_s), alpha_x=ax, alpha_y=ay, isotropic=isotropic),
        rho=rho_b,
        rho_texels=texels,
        frame=frame,
        rms=best.rms,
        converged=best.converged,
    )
