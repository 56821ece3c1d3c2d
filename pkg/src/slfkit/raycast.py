"""Ray-mesh intersection with a flat leaf-box hierarchy.

Triangles are grouped into leaves by recursive median split; rays are
processed in chunks, testing each leaf's bounding box first and running the
ray-triangle test only for rays that enter the box closer than their current
best hit. Leaves are visited roughly front to back so the best-hit bound
prunes most of the remaining work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TriangleMesh

_DET_EPS = 1e-12
_BARY_EPS = 1e-10
_DIR_EPS = 1e-12


@dataclass
class RayHits:
    hit: np.ndarray  # (N,) bool
    t: np.ndarray  # (N,) distance along the ray, inf where missed
    face: np.ndarray  # (N,) face index, -1 where missed
    bary: np.ndarray  # (N, 3) barycentric coordinates of the hit point

    def points(self, origins, dirs) -> np.ndarray:
        return np.asarray(origins) + self.t[:, None] * np.asarray(dirs)


def _split_leaves(centroids, indices, leaf_size):
    stack = [indices]
    leaves = []
    while stack:
        idx = stack.pop()
        if len(idx) <= leaf_size:
            leaves.append(idx)
            continue
        c = centroids[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = np.argsort(c[:, axis], kind="stable")
        half = len(idx) // 2
        stack.append(idx[order[:half]])
        stack.append(idx[order[half:]])
    return leaves


class RayMesh:
    """Immutable acceleration structure over a triangle mesh."""

    def __init__(self, mesh: TriangleMesh, leaf_size: int = 64):
        tri = mesh.face_points()
        centroids = tri.mean(axis=1)
        leaves = _split_leaves(centroids, np.arange(len(tri)), leaf_size)
        self.leaf_faces = [np.sort(leaf) for leaf in leaves]
        self.leaf_v0 = []
        self.leaf_e1 = []
        self.leaf_e2 = []
        n_leaves = len(self.leaf_faces)
        self.leaf_lo = np.zeros((n_leaves, 3))
        self.leaf_hi = np.zeros((n_leaves, 3))
        for k, leaf in enumerate(self.leaf_faces):
            p = tri[leaf]
            self.leaf_v0.append(p[:, 0])
            self.leaf_e1.append(p[:, 1] - p[:, 0])
            self.leaf_e2.append(p[:, 2] - p[:, 0])
            self.leaf_lo[k] = p.reshape(-1, 3).min(axis=0)
            self.leaf_hi[k] = p.reshape(-1, 3).max(axis=0)
        self.leaf_center = 0.5 * (self.leaf_lo + self.leaf_hi)
        self.n_faces = len(tri)

    def intersect(
        self,
        origins,
        dirs,
        t_min: float = 1e-6,
        t_max=np.inf,
        chunk: int = 16384,
    ) -> RayHits:
        """Closest hit for every ray; triangles are double-sided.

        `t_max` may be a scalar or a per-ray array; hits at or beyond it are
        ignored, which makes bounded queries (shadow segments) cheap.
        """
        o_all = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        d_all = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        n = len(o_all)
        t_max = np.broadcast_to(np.asarray(t_max, dtype=np.float64), (n,))
        t = np.full(n, np.inf)
        face = np.full(n, -1, dtype=np.int64)
        bary = np.zeros((n, 3))
        for s in range(0, n, chunk):
            sl = slice(s, min(s + chunk, n))
            self._intersect_chunk(
                o_all[sl], d_all[sl], t_min, t_max[sl], t[sl], face[sl], bary[sl]
            )
        return RayHits(hit=face >= 0, t=np.where(face >= 0, t, np.inf), face=face, bary=bary)

    def _intersect_chunk(self, o, d, t_min, t_max, t_out, face_out, bary_out):
        safe_d = np.where(np.abs(d) < _DIR_EPS, _DIR_EPS, d)
        inv_d = 1.0 / safe_d
        t_best = t_max.copy()
        mean_o = o.mean(axis=0)
        mean_d = d.mean(axis=0)
        order = np.argsort((self.leaf_center - mean_o) @ mean_d)
        for leaf in order:
            b0 = (self.leaf_lo[leaf] - o) * inv_d
            b1 = (self.leaf_hi[leaf] - o) * inv_d
            near = np.minimum(b0, b1).max(axis=1)
            far = np.maximum(b0, b1).min(axis=1)
            active = (far >= np.maximum(near, t_min)) & (near < t_best)
            if not active.any():
                continue
            ai = np.nonzero(active)[0]
            v0 = self.leaf_v0[leaf]
            e1 = self.leaf_e1[leaf]
            e2 = self.leaf_e2[leaf]
            ob = o[ai]
            db = d[ai]
            pvec = np.cross(db[:, None], e2[None])
            det = np.einsum("rtk,tk->rt", pvec, e1)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv_det = 1.0 / det
            tvec = ob[:, None] - v0[None]
            u = np.einsum("rtk,rtk->rt", tvec, pvec) * inv_det
            qvec = np.cross(tvec, e1[None])
            v = np.einsum("rtk,rk->rt", qvec, db) * inv_det
            t_hit = np.einsum("rtk,tk->rt", qvec, e2) * inv_det
            ok = (
                (np.abs(det) > _DET_EPS)
                & (u >= -_BARY_EPS)
                & (v >= -_BARY_EPS)
                & (u + v <= 1.0 + _BARY_EPS)
                & (t_hit >= t_min)
                & (t_hit < t_best[ai, None])
            )
            t_masked = np.where(ok, t_hit, np.inf)
            best = np.argmin(t_masked, axis=1)
            rows = np.arange(len(ai))
            got = t_masked[rows, best] < t_best[ai]
            if not got.any():
                continue
            sel = ai[got]
            bt = best[got]
            t_best[sel] = t_masked[rows[got], bt]
            t_out[sel] = t_best[sel]
            face_out[sel] = self.leaf_faces[leaf][bt]
            uu = u[rows[got], bt]
            vv = v[rows[got], bt]
            bary_out[sel, 0] = 1.0 - uu - vv
            bary_out[sel, 1] = uu
            bary_out[sel, 2] = vv

    def occluded(self, origins, targets, eps: float = 1e-4, chunk: int = 16384) -> np.ndarray:
        """True where the open segment origin -> target is blocked by the mesh."""
        o = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        g = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        seg = g - o
        length = np.linalg.norm(seg, axis=1)
        safe = np.where(length > 0, length, 1.0)
        d = seg / safe[:, None]
        hits = self.intersect(o, d, t_min=eps, t_max=length - eps, chunk=chunk)
        return hits.hit
