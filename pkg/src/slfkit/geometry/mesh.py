"""Triangle meshes with per-face atlas charts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORMAL_TOL = 1e-6


@dataclass
class TriangleMesh:
    """Vertices (meters), unit vertex normals, faces, and optional UV charts.

    `uv_charts` holds one (3, 2) triple of atlas coordinates in [0, 1]^2 per
    face; it is populated by the atlas parameterization and must be
    overlap-free across faces.
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray | None = None
    uv_charts: np.ndarray | None = None
    edges: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        nv = len(self.vertices)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise ValueError("face index out of range")
        if self.normals is None:
            self.normals = vertex_normals(self.vertices, self.faces)
        else:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            lens = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(lens - 1.0) > NORMAL_TOL):
                raise ValueError("vertex normals must have unit length")
        if self.uv_charts is not None:
            self.uv_charts = np.asarray(self.uv_charts, dtype=np.float64).reshape(-1, 3, 2)
            if len(self.uv_charts) != len(self.faces):
                raise ValueError("uv_charts must have one entry per face")
        self.edges = undirected_edges(self.faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def face_points(self) -> np.ndarray:
        """(F, 3, 3) vertex positions per face."""
        return self.vertices[self.faces]

    def face_normals(self) -> np.ndarray:
        """Unit geometric normal per face."""
        p = self.face_points()
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        lens[lens == 0] = 1.0
        return n / lens

    def face_areas(self) -> np.ndarray:
        p = self.face_points()
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized."""
    p = vertices[faces]
    fn = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])  # length = 2 * area
    normals = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(normals, faces[:, k], fn)
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    return normals / lens


def undirected_edges(faces: np.ndarray) -> np.ndarray:
    """Sorted unique undirected edges (E, 2) from the face list."""
    if faces.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)
