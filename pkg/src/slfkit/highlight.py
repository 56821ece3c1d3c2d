"""Removes view-dependent highlights baked into the fused texture.

The fused atlas is a weighted mean over all views, so texels seen under a
specular highlight in some frames carry a bright bias. Re-solving each texel
as an iteratively reweighted mean, where observations brighter than the
current estimate are down-weighted by a Gaussian falloff, converges onto the
darker (diffuse) side of the observation set. Texels observed only under
highlight keep the highlight: the estimate is a least upper bound of what was
actually seen, not an extrapolation.
"""

from dataclasses import dataclass

import numpy as np

from .brdffit.ward import MaterialModel
from .geometry.atlas import AtlasTables
from .imgio import greyscale
from .texfuse.atlas import TextureAtlas

# albedo thresholds for the zero-diffuse (metallic) override
METALLIC_RHO_MAX = 0.03
METALLIC_RHO_S_MIN = 0.15


@dataclass(frozen=True)
class IrlsParams:
    tau: float = 0.03  # brightness slack above the estimate that stays at full weight
    v: float = 0.05  # Gaussian falloff width beyond the slack
    iterations: int = 2

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.v <= 0:
            raise ValueError("v must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def gate_multiplier(q_hat, q, params: IrlsParams) -> np.ndarray:
    """Weight multiplier in (0, 1]: 1 at or below q_hat + tau, Gaussian above."""
    q_hat = np.asarray(q_hat, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    gap = q_hat + params.tau - q
    return np.where(gap >= 0, 1.0, np.exp(-((gap / params.v) ** 2)))


def irls_texel(rgb, weight, params: IrlsParams | None = None) -> np.ndarray:
    """Diffuse color of one texel from its per-frame observations.

    The gate is evaluated on greyscale intensity and the resulting multiplier
    scales all three channels jointly, so rejecting a highlight cannot shift
    the chroma of what remains.
    """
    params = params or IrlsParams()
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    weight = np.asarray(weight, dtype=np.float64).reshape(-1)
    if len(rgb) != len(weight):
        raise ValueError("one weight per observation required")
    if not np.any(weight > 0):
        raise ValueError("need at least one observation with positive weight")
    grey = greyscale(rgb)
    q_hat = weight @ rgb / weight.sum()
    for _ in range(params.iterations):
        mu = gate_multiplier(greyscale(q_hat), grey, params)
        wm = weight * mu
        q_hat = wm @ rgb / wm.sum()
    return q_hat


def remove_highlights(
    atlas: TextureAtlas, observations: np.ndarray, params: IrlsParams | None = None
) -> TextureAtlas:
    """Re-solve every observed texel of a fused atlas from its sidecar records.

    All iterations run vectorized over the whole sidecar: per-texel estimates
    are gathered by the records' texel ids, gated, and re-accumulated with
    bincount. Texels with a single observation come back unchanged (any
    positive weight normalizes away).
    """
    params = params or IrlsParams()
    size = atlas.size
    texel = observations["texel"].astype(np.int64)
    rgb = observations["rgb"].astype(np.float64)
    w = observations["weight"].astype(np.float64)

    observed = atlas.observed_mask()
    covered = np.zeros(size * size, dtype=bool)
    covered[texel[w > 0]] = True
    missing = observed.ravel() & ~covered
    if np.any(missing):
        raise ValueError(
            f"{int(missing.sum())} fused texels have no sidecar observations; "
            "the fuse stage must record observations for highlight removal"
        )

    grey = greyscale(rgb)
    n = size * size

    def weighted_mean(weights):
        tot = np.bincount(texel, weights=weights, minlength=n)
        out = np.zeros((n, 3))
        for c in range(3):
            out[:, c] = np.bincount(texel, weights=weights * rgb[:, c], minlength=n)
        safe = np.maximum(tot, 1e-30)
        return out / safe[:, None], tot > 0

    q_hat, has = weighted_mean(w)
    for _ in range(params.iterations):
        mu = gate_multiplier(greyscale(q_hat)[texel], grey, params)
        q_hat, has = weighted_mean(w * mu)

    out = TextureAtlas(size, rgb=atlas.rgb.copy(), weight=atlas.weight.copy())
    flat = out.rgb.reshape(-1, 3)
    flat[has] = q_hat[has]
    return out


def texel_segments(tables: AtlasTables, faces: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-texel segment id image (-1 where the atlas has no surface).

    A texel inherits the label of its dominant vertex (largest barycentric
    coordinate), which keeps assignments deterministic across segment
    boundaries running through a face.
    """
    size = tables.atlas_size
    seg = np.full((size, size), -1, dtype=np.int64)
    corner = np.argmax(tables.bary, axis=1)
    vert = faces[tables.face, corner]
    seg.ravel()[tables.texel_ids] = labels[vert]
    return seg


def metallic_segments(materials: list[MaterialModel]) -> list[int]:
    """Segments whose fits say 'dark but shiny': diffuse texture is untrusted."""
    return [
        m.segment
        for m in materials
        if float(np.mean(m.rho)) < METALLIC_RHO_MAX and m.params.rho_s > METALLIC_RHO_S_MIN
    ]


def apply_metallic_rule(
    rgb: np.ndarray, segments: np.ndarray, materials: list[MaterialModel]
) -> np.ndarray:
    """Zero the diffuse layer on metallic segments (their apparent diffuse
    color is residual highlight, not surface albedo)."""
    out = np.array(rgb, dtype=np.float64, copy=True)
    zeroed = metallic_segments(materials)
    if zeroed:
        out[np.isin(segments, zeroed)] = 0.0
    return out


def difference_map(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    """Greyscale magnitude of what highlight removal took away, for preview
    imagery; scaled so the brightest change maps to 1."""
    d = greyscale(np.abs(np.asarray(before) - np.asarray(after)))
    peak = d.max()
    return d / peak if peak > 0 else d
