"""Anisotropy direction recovery from a tangent-plane intensity slice.

Observed intensities are splatted into a 2D grid indexed by the tangential
part of each sample's half vector (transported to a reference normal), then
the axis about which the smoothed slice is most mirror-symmetric gives the
shared tangent direction of the segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates
from scipy.optimize import minimize

from .samples import IrSamples
from .ward import TangentFrame

GRID = 129
RADIUS = 0.7  # tangential radius; sin of the largest usable half-angle
SMOOTH_SIGMA = 2.0  # cells
MIN_SLICE_SAMPLES = 100


class InsufficientViewsError(ValueError):
    pass


class TangentUndeterminedError(ValueError):
    pass


@dataclass
class BrdfSlice:
    values: np.ndarray  # (G, G) smoothed intensity, NaN where uncovered
    counts: np.ndarray  # (G, G) raw sample counts
    normal: np.ndarray  # reference normal n_R
    e1: np.ndarray  # slice u axis, world frame, unit, perpendicular to normal
    e2: np.ndarray  # slice v axis = normal x e1
    radius: float = RADIUS

    def coverage(self) -> float:
        """Fraction of in-disk cells that received samples."""
        g = self.values.shape[0]
        ax = (np.arange(g) + 0.5) / g * 2 - 1
        u, v = np.meshgrid(ax, ax)
        disk = u * u + v * v <= 1.0
        return float((self.counts[disk] > 0).mean())


def _tangent_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0]) if abs(normal[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(helper, normal)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def build_brdf_slice(
    samples: IrSamples,
    grid: int = GRID,
    radius: float = RADIUS,
    sigma: float = SMOOTH_SIGMA,
    min_coverage: float = 0.05,
) -> BrdfSlice:
    """Splat observed intensity over the tangent plane of a reference normal.

    The reference is the sample whose half vector is closest to its normal.
    Each sample lands at the projection of (n_ref + h - n) onto the plane
    perpendicular to n_ref, which transports lobes measured under varying
    normals into one common frame.
    """
    if len(samples) < MIN_SLICE_SAMPLES:
        raise InsufficientViewsError(
            f"need at least {MIN_SLICE_SAMPLES} samples, got {len(samples)}"
        )
    ref = int(np.argmin(samples.half_angles()))
    n_ref = samples.n[ref]
    e1, e2 = _tangent_basis(n_ref)

    shifted = n_ref[None, :] + samples.h - samples.n
    u = shifted @ e1
    v = shifted @ e2
    inside = u * u + v * v <= radius * radius
    iu = np.floor((u[inside] + radius) / (2 * radius) * grid).astype(int)
    iv = np.floor((v[inside] + radius) / (2 * radius) * grid).astype(int)
    iu = np.clip(iu, 0, grid - 1)
    iv = np.clip(iv, 0, grid - 1)
    flat = iv * grid + iu
    sums = np.bincount(flat, weights=samples.intensity[inside], minlength=grid * grid)
    counts = np.bincount(flat, minlength=grid * grid).astype(np.float64)
    sums = sums.reshape(grid, grid)
    counts = counts.reshape(grid, grid)

    # normalized convolution: smooth mass and weight separately, then divide
    num = gaussian_filter(sums, sigma)
    den = gaussian_filter(counts, sigma)
    values = np.full((grid, grid), np.nan)
    ok = den > 1e-6
    values[ok] = num[ok] / den[ok]

    slc = BrdfSlice(values=values, counts=counts.astype(np.int64).astype(np.float64),
                    normal=n_ref, e1=e1, e2=e2, radius=radius)
    if slc.coverage() < min_coverage:
        raise InsufficientViewsError(
            f"slice coverage {slc.coverage():.3f} below {min_coverage}; need more views"
        )
    return slc


def _mirror_score(values: np.ndarray, phi: float) -> float:
    """Negative mean squared difference between the slice and its mirror
    about the axis through the center at angle phi."""
    g = values.shape[0]
    c = (g - 1) / 2.0
    ys, xs = np.mgrid[0:g, 0:g]
    x = xs - c
    y = ys - c
    # reflection about the phi axis: R(2phi) composed with flip of y
    c2, s2 = np.cos(2 * phi), np.sin(2 * phi)
    xr = c2 * x + s2 * y
    yr = s2 * x - c2 * y
    mirrored = map_coordinates(
        np.nan_to_num(values, nan=0.0), [yr + c, xr + c], order=1, mode="constant", cval=np.nan
    )
    valid_src = np.isfinite(values)
    valid_m = map_coordinates(
        valid_src.astype(np.float64), [yr + c, xr + c], order=1, mode="constant", cval=0.0
    )
    ok = valid_src & (valid_m > 0.999) & np.isfinite(mirrored)
    if ok.sum() < 16:
        return -np.inf
    d = values[ok] - mirrored[ok]
    return -float(np.mean(d * d))


def fit_tangent(
    slc: BrdfSlice,
    coarse_steps: int = 36,
    flat_tol: float = 0.2,
) -> TangentFrame:
    """Tangent frame from the mirror-symmetry optimum of the slice.

    Scans the half-circle coarsely, polishes the best angle with Nelder-Mead,
    and resolves the 90-degree ambiguity of an elliptical lobe by taking the
    axis with the larger intensity spread (the more elongated direction).
    Raises TangentUndeterminedError when the score is flat over angle, which
    is the isotropic case. Flatness is judged against the slice's own
    variance: splat noise keeps absolute scores nonzero even for a perfectly
    round lobe, so the spread of the score over angle is compared to the
    intensity variance rather than to the score magnitude.
    """
    phis = np.linspace(0.0, np.pi, coarse_steps, endpoint=False)
    scores = np.array([_mirror_score(slc.values, p) for p in phis])
    if not np.isfinite(scores).any():
        raise TangentUndeterminedError("no angle has enough mirrored coverage")
    smax, smin = scores.max(), scores.min()
    var = float(np.nanvar(slc.values))
    if var <= 0 or smax - smin < flat_tol * var:
        raise TangentUndeterminedError(
            "symmetry score is flat over angle; the slice looks isotropic"
        )

    def polish(p0: float) -> tuple[float, float]:
        r = minimize(
            lambda p: -_mirror_score(slc.values, float(p[0])),
            x0=[p0],
            method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-12, "maxiter": 200},
        )
        return float(r.x[0]), -float(r.fun)

    # both principal axes of an elliptical lobe are mirror axes; polish the
    # best coarse angle and its quarter-turn twin, then pick by elongation
    p_best = phis[int(np.argmax(scores))]
    cand = [polish(p_best)[0], polish(p_best + np.pi / 2)[0]]
    cand = [p % np.pi for p in cand]
    spreads = [_axis_spread(slc, p) for p in cand]
    phi = cand[int(np.argmax(spreads))]

    t = np.cos(phi) * slc.e1 + np.sin(phi) * slc.e2
    b = np.cross(slc.normal, t)
    return TangentFrame(tangent=t, binormal=b, normal=slc.normal)


def _axis_spread(slc: BrdfSlice, phi: float) -> float:
    """Intensity-weighted second moment along the axis at angle phi."""
    g = slc.values.shape[0]
    c = (g - 1) / 2.0
    ys, xs = np.mgrid[0:g, 0:g]
    w = np.nan_to_num(slc.values, nan=0.0)
    w = w - np.nanmin(slc.values) if np.isfinite(slc.values).any() else w
    w = np.where(np.isfinite(slc.values), np.maximum(w, 0.0), 0.0)
    along = (xs - c) * np.cos(phi) + (ys - c) * np.sin(phi)
    total = w.sum()
    if total <= 0:
        return 0.0
    return float((w * along * along).sum() / total)
