"""Texture atlas parameterization: non-overlapping per-face charts.

Each face gets its own square cell in a uniform grid and is laid out as a
right triangle inset from the cell border, so charts of different faces are
separated by a fixed gutter. Texel centers inside a chart map to surface
points through barycentric interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh

GUTTER_TEXELS = 2.0
_INSET = GUTTER_TEXELS / 2.0  # per-cell inset; neighbors end up GUTTER apart


class AtlasPackingError(ValueError):
    """Atlas too small for the requested per-face resolution."""


@dataclass(frozen=True)
class AtlasCoord:
    """Continuous texel coordinate inside a specific face's chart."""

    u: float
    v: float
    face: int


def parameterize_atlas(
    mesh: TriangleMesh,
    atlas_size: int,
    texels_per_meter: float | None = None,
    min_face_texels: float = 4.0,
) -> np.ndarray:
    """Assign a UV chart to every face; returns and installs mesh.uv_charts.

    With `texels_per_meter` the cell size follows the longest edge of the
    largest face; otherwise faces share the largest grid that fits.
    """
    nf = mesh.n_faces
    if nf == 0:
        raise ValueError("mesh has no faces")
    per_row_cap = int(np.ceil(np.sqrt(nf)))
    if texels_per_meter is not None:
        p = mesh.face_points()
        edge_len = np.linalg.norm(
            p[:, [1, 2, 0]] - p[:, [0, 1, 2]], axis=2
        ).max()
        cell = int(np.ceil(edge_len * texels_per_meter + 2 * _INSET + 1))
    else:
        cell = atlas_size // per_row_cap
    per_row = atlas_size // cell if cell > 0 else 0
    if per_row * per_row < nf:
        raise AtlasPackingError(
            f"atlas of {atlas_size} texels cannot hold {nf} charts of {cell} texels"
        )
    usable = cell - 2 * _INSET
    if usable * usable / 2.0 < min_face_texels:
        raise AtlasPackingError(
            f"cell size {cell} leaves under {min_face_texels} texels per face"
        )

    idx = np.arange(nf)
    col = (idx % per_row) * cell
    row = (idx // per_row) * cell
    c0 = np.stack([col + _INSET, row + _INSET], axis=1)
    c1 = np.stack([col + cell - _INSET, row + _INSET], axis=1)
    c2 = np.stack([col + _INSET, row + cell - _INSET], axis=1)
    charts = np.stack([c0, c1, c2], axis=1) / float(atlas_size)
    mesh.uv_charts = charts
    return charts


def surface_to_atlas(mesh: TriangleMesh, face, bary) -> np.ndarray:
    """Atlas UV in [0,1]^2 for barycentric coordinates on given faces."""
    charts = mesh.uv_charts[np.asarray(face)]
    b = np.asarray(bary, dtype=np.float64)
    return np.einsum("...k,...kd->...d", b, charts)


def vertex_uvs(mesh: TriangleMesh, inset: float = 0.0) -> np.ndarray:
    """One atlas UV per vertex, taken from the first incident face's chart.

    `inset` > 0 pulls the coordinate toward the face centroid, keeping the
    sample strictly inside the chart (useful for bilinear lookups).
    """
    nv = mesh.n_vertices
    uv = np.full((nv, 2), np.nan)
    done = np.zeros(nv, dtype=bool)
    for f in range(mesh.n_faces):
        chart = mesh.uv_charts[f]
        centroid = chart.mean(axis=0)
        for k in range(3):
            v = mesh.faces[f, k]
            if not done[v]:
                uv[v] = chart[k] * (1 - inset) + centroid * inset
                done[v] = True
    return uv


@dataclass
class AtlasTables:
    """Per-texel surface lookup for all texels covered by charts."""

    atlas_size: int
    texel_ids: np.ndarray  # (N,) flat index iy * size + ix
    face: np.ndarray  # (N,)
    bary: np.ndarray  # (N, 3)
    points: np.ndarray  # (N, 3) world
    normals: np.ndarray  # (N, 3) unit

    @property
    def ix(self) -> np.ndarray:
        return self.texel_ids % self.atlas_size

    @property
    def iy(self) -> np.ndarray:
        return self.texel_ids // self.atlas_size

    def coverage_mask(self) -> np.ndarray:
        m = np.zeros((self.atlas_size, self.atlas_size), dtype=bool)
        m.reshape(-1)[self.texel_ids] = True
        return m


def build_atlas_tables(mesh: TriangleMesh, atlas_size: int) -> AtlasTables:
    """Rasterize every chart over texel centers and map them to the surface."""
    if mesh.uv_charts is None:
        raise ValueError("mesh has no uv charts; run parameterize_atlas first")
    ids, faces, barys = [], [], []
    charts_px = mesh.uv_charts * atlas_size
    for f in range(mesh.n_faces):
        tri = charts_px[f]
        lo = np.floor(tri.min(axis=0) - 0.5).astype(int)
        hi = np.ceil(tri.max(axis=0) + 0.5).astype(int)
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, atlas_size - 1)
        if np.any(hi < lo):
            continue
        xs = np.arange(lo[0], hi[0] + 1)
        ys = np.arange(lo[1], hi[1] + 1)
        gx, gy = np.meshgrid(xs, ys)
        b = barycentric_2d(tri, gx + 0.5, gy + 0.5)
        inside = np.all(b >= -1e-12, axis=-1)
        if not inside.any():
            continue
        sel_x = gx[inside]
        sel_y = gy[inside]
        ids.append(sel_y * atlas_size + sel_x)
        faces.append(np.full(len(sel_x), f, dtype=np.int64))
        barys.append(b[inside])
    texel_ids = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
    face = np.concatenate(faces) if faces else np.zeros(0, dtype=np.int64)
    bary = np.concatenate(barys) if barys else np.zeros((0, 3))
    pts = np.einsum("nk,nkd->nd", bary, mesh.vertices[mesh.faces[face]])
    nrm = np.einsum("nk,nkd->nd", bary, mesh.normals[mesh.faces[face]])
    lens = np.linalg.norm(nrm, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    order = np.argsort(texel_ids, kind="stable")
    return AtlasTables(
        atlas_size=atlas_size,
        texel_ids=texel_ids[order],
        face=face[order],
        bary=bary[order],
        points=pts[order],
        normals=(nrm / lens)[order],
    )


def barycentric_2d(tri: np.ndarray, x, y) -> np.ndarray:
    """Barycentric coordinates of points (x, y) w.r.t. a 2D triangle (3, 2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x0, y0 = tri[0]
    x1, y1 = tri[1]
    x2, y2 = tri[2]
    det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    if abs(det) < 1e-15:
        raise ValueError("degenerate chart triangle")
    w0 = ((y1 - y2) * (x - x2) + (x2 - x1) * (y - y2)) / det
    w1 = ((y2 - y0) * (x - x2) + (x0 - x2) * (y - y2)) / det
    return np.stack([w0, w1, 1.0 - w0 - w1], axis=-1)


def dilate_into_gutter(image: np.ndarray, coverage: np.ndarray, iterations: int = 2) -> np.ndarray:
    """Spread chart-border texel values into the empty gutter.

    Each pass assigns every uncovered texel the mean of its covered
    4-neighbors; this keeps bilinear lookups near chart edges from mixing in
    empty texels. Covered texels are never modified.
    """
    out = np.array(image, dtype=np.float64, copy=True)
    cov = np.array(coverage, dtype=bool, copy=True)
    flat_extra = out.shape[2:]
    for _ in range(iterations):
        acc = np.zeros_like(out)
        cnt = np.zeros(cov.shape)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted = np.roll(np.roll(out, dy, axis=0), dx, axis=1)
            scov = np.roll(np.roll(cov, dy, axis=0), dx, axis=1)
            # roll wraps; kill wrapped rows/cols
            if dy == 1:
                scov[0] = False
            elif dy == -1:
                scov[-1] = False
            if dx == 1:
                scov[:, 0] = False
            elif dx == -1:
                scov[:, -1] = False
            m = scov & ~cov
            acc[m] += shifted[m]
            cnt[m] += 1.0
        fill = (cnt > 0) & ~cov
        if not fill.any():
            break
        if flat_extra:
            acc[fill] /= cnt[fill][:, None]
        else:
            acc[fill] /= cnt[fill]
        out[fill] = acc[fill]
        cov |= fill
    return out


def count_chart_overlaps(mesh: TriangleMesh, atlas_size: int) -> int:
    """Number of texels claimed by more than one chart (must be zero)."""
    owner = np.full(atlas_size * atlas_size, -1, dtype=np.int64)
    overlaps = 0
    charts_px = mesh.uv_charts * atlas_size
    for f in range(mesh.n_faces):
        tri = charts_px[f]
        lo = np.maximum(np.floor(tri.min(axis=0) - 0.5).astype(int), 0)
        hi = np.minimum(np.ceil(tri.max(axis=0) + 0.5).astype(int), atlas_size - 1)
        xs = np.arange(lo[0], hi[0] + 1)
        ys = np.arange(lo[1], hi[1] + 1)
        gx, gy = np.meshgrid(xs, ys)
        b = barycentric_2d(tri, gx + 0.5, gy + 0.5)
        inside = np.all(b >= -1e-12, axis=-1)
        flat = gy[inside] * atlas_size + gx[inside]
        taken = owner[flat] >= 0
        overlaps += int(taken.sum())
        owner[flat] = f
    return overlaps
