"""Ground-truth scene description for the synthetic RGBD+IR sensor.

A scene bundles a mesh with per-vertex material labels, one reflectance
record per segment (diffuse RGB albedo + IR albedo + glossy lobe), an
environment map, and the on-board IR projector. The view-independent layer
the estimators must recover is baked here once per scene: for every atlas
texel, diffuse irradiance is integrated against the environment (with shadow
rays) and multiplied by albedo/pi. All sensor images derive from that bake,
so it doubles as the oracle texture for fusion tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..brdffit import MaterialModel
from ..envmap import EnvironmentMap
from ..geometry import (
    AtlasTables,
    TriangleMesh,
    build_atlas_tables,
    load_ply,
    parameterize_atlas,
    save_ply,
)
from ..imgio import read_pfm, write_pfm
from ..raycast import RayMesh

_SHADOW_OFFSET = 1e-4  # meters along the normal before a shadow ray starts
_SHADOW_REACH = 50.0  # meters; environment lies beyond any scene geometry


@dataclass(frozen=True)
class IrProjector:
    """Point IR source riding with the camera plus the sensor's compression."""

    kappa: float
    gamma: float
    offset: np.ndarray = field(default_factory=lambda: np.array([0.025, 0.0, 0.0]))
    mode: str = "dense"
    speckle_period: int = 3

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.mode not in ("dense", "speckle"):
            raise ValueError("mode must be 'dense' or 'speckle'")
        if self.speckle_period < 1:
            raise ValueError("speckle_period must be >= 1")
        object.__setattr__(
            self, "offset", np.asarray(self.offset, dtype=np.float64).reshape(3)
        )

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "gamma": self.gamma,
            "offset": self.offset.tolist(),
            "mode": self.mode,
            "speckle_period": self.speckle_period,
        }

    @staticmethod
    def from_dict(d: dict) -> "IrProjector":
        return IrProjector(
            kappa=float(d["kappa"]),
            gamma=float(d["gamma"]),
            offset=np.asarray(d["offset"]),
            mode=d.get("mode", "dense"),
            speckle_period=int(d.get("speckle_period", 3)),
        )


@dataclass
class SceneMaterial:
    """Reflectance of one segment: RGB diffuse albedo plus the IR/glossy model."""

    model: MaterialModel
    diffuse_rgb: np.ndarray

    def __post_init__(self):
        self.diffuse_rgb = np.asarray(self.diffuse_rgb, dtype=np.float64).reshape(3)
        if np.any(self.diffuse_rgb < 0):
            raise ValueError("albedo must be non-negative")

    def to_dict(self) -> dict:
        return {"diffuse_rgb": self.diffuse_rgb.tolist(), **self.model.to_dict()}

    @staticmethod
    def from_dict(d: dict) -> "SceneMaterial":
        return SceneMaterial(
            model=MaterialModel.from_dict(d), diffuse_rgb=np.asarray(d["diffuse_rgb"])
        )


class GroundTruthScene:
    def __init__(
        self,
        mesh: TriangleMesh,
        labels,
        materials: dict[int, SceneMaterial],
        environment: EnvironmentMap,
        projector: IrProjector,
        atlas_size: int = 256,
        albedo_texture: np.ndarray | None = None,
        diffuse_shadows: bool = True,
        env_samples_height: int = 12,
    ):
        self.mesh = mesh
        self.labels = np.asarray(labels, dtype=np.int64).ravel()
        if len(self.labels) != mesh.n_vertices:
            raise ValueError("need one label per vertex")
        missing = set(np.unique(self.labels)) - set(materials)
        if missing:
            raise ValueError(f"labels reference missing materials: {sorted(missing)}")
        self.materials = dict(materials)
        self.environment = environment
        self.projector = projector
        self.atlas_size = atlas_size
        self.albedo_texture = albedo_texture
        self.diffuse_shadows = diffuse_shadows
        self.env_samples_height = env_samples_height
        if mesh.uv_charts is None:
            parameterize_atlas(mesh, atlas_size)
        self._tables: AtlasTables | None = None
        self._raymesh: RayMesh | None = None
        self._diffuse_texture: np.ndarray | None = None
        self._diffuse_filled: np.ndarray | None = None
        self._irradiance: np.ndarray | None = None
        self._face_segments: np.ndarray | None = None

    # -- lazy derived state --------------------------------------------------

    @property
    def tables(self) -> AtlasTables:
        if self._tables is None:
            self._tables = build_atlas_tables(self.mesh, self.atlas_size)
        return self._tables

    @property
    def raymesh(self) -> RayMesh:
        if self._raymesh is None:
            self._raymesh = RayMesh(self.mesh)
        return self._raymesh

    def face_segments(self) -> np.ndarray:
        """Majority vertex label per face (smallest label wins ties)."""
        if self._face_segments is None:
            lab = self.labels[self.mesh.faces]  # (F, 3)
            out = np.empty(self.mesh.n_faces, dtype=np.int64)
            for f in range(self.mesh.n_faces):
                vals, counts = np.unique(lab[f], return_counts=True)
                out[f] = vals[np.argmax(counts)]
            self._face_segments = out
        return self._face_segments

    def texel_segments(self) -> np.ndarray:
        return self.face_segments()[self.tables.face]

    def texel_albedo(self) -> np.ndarray:
        """(N, 3) diffuse RGB albedo per covered atlas texel."""
        seg = self.texel_segments()
        alb = np.zeros((len(seg), 3))
        for s, mat in self.materials.items():
            alb[seg == s] = mat.diffuse_rgb
        if self.albedo_texture is not None:
            alb = self.albedo_texture.reshape(-1, 3)[self.tables.texel_ids]
        return alb

    # -- view-independent layer ----------------------------------------------

    def irradiance(self) -> np.ndarray:
        """(N, 3) diffuse irradiance per covered texel, baked once."""
        if self._irradiance is None:
            self._irradiance = self._bake_irradiance()
        return self._irradiance

    def _bake_irradiance(self, chunk: int = 2048) -> np.ndarray:
        env = self.environment
        if env.height > self.env_samples_height:
            env = env.downsampled(self.env_samples_height)
        dirs = env.texel_directions().reshape(-1, 3)
        rad = env.radiance.reshape(-1, 3)
        omega = env.texel_solid_angles().reshape(-1)
        pts = self.tables.points
        nrm = self.tables.normals
        out = np.zeros((len(pts), 3))
        for s in range(0, len(pts), chunk):
            sl = slice(s, min(s + chunk, len(pts)))
            cos = nrm[sl] @ dirs.T  # (C, S)
            w = np.maximum(cos, 0.0) * omega[None, :]
            if self.diffuse_shadows:
                rows, cols = np.nonzero(w > 0)
                if len(rows):
                    origins = pts[sl][rows] + _SHADOW_OFFSET * nrm[sl][rows]
                    targets = origins + dirs[cols] * _SHADOW_REACH
                    blocked = self.raymesh.occluded(origins, targets)
                    w[rows[blocked], cols[blocked]] = 0.0
            out[sl] = w @ rad
        return out

    def diffuse_texture(self) -> np.ndarray:
        """Ground-truth view-independent texture: albedo/pi * irradiance.

        Returned as a full (size, size, 3) atlas image, zero outside charts.
        """
        if self._diffuse_texture is None:
            tex = np.zeros((self.atlas_size * self.atlas_size, 3))
            tex[self.tables.texel_ids] = self.texel_albedo() / np.pi * self.irradiance()
            self._diffuse_texture = tex.reshape(self.atlas_size, self.atlas_size, 3)
        return self._diffuse_texture

    def diffuse_texture_filled(self) -> np.ndarray:
        """Diffuse texture with chart borders spread into the gutter, cached."""
        if self._diffuse_filled is None:
            from ..geometry import dilate_into_gutter

            self._diffuse_filled = dilate_into_gutter(
                self.diffuse_texture(), self.tables.coverage_mask()
            )
        return self._diffuse_filled

    def segment_of_faces(self, faces) -> np.ndarray:
        return self.face_segments()[np.asarray(faces)]

    # -- persistence ----------------------------------------------------------

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_ply(directory / "mesh.ply", self.mesh)
        self.environment.save(directory / "environment.pfm")
        if self.albedo_texture is not None:
            write_pfm(directory / "albedo.pfm", self.albedo_texture.astype(np.float32))
        doc = {
            "labels": self.labels.tolist(),
            "materials": {str(k): m.to_dict() for k, m in self.materials.items()},
            "projector": self.projector.to_dict(),
            "atlas_size": self.atlas_size,
            "diffuse_shadows": self.diffuse_shadows,
            "env_samples_height": self.env_samples_height,
            "has_albedo_texture": self.albedo_texture is not None,
        }
        with open(directory / "scene.json", "w") as fh:
            json.dump(doc, fh, indent=2)

    @staticmethod
    def load(directory) -> "GroundTruthScene":
        directory = Path(directory)
        with open(directory / "scene.json") as fh:
            doc = json.load(fh)
        mesh = load_ply(directory / "mesh.ply")
        albedo = None
        if doc.get("has_albedo_texture"):
            albedo = read_pfm(directory / "albedo.pfm").astype(np.float64)
        return GroundTruthScene(
            mesh=mesh,
            labels=np.asarray(doc["labels"]),
            materials={
                int(k): SceneMaterial.from_dict(v) for k, v in doc["materials"].items()
            },
            environment=EnvironmentMap.load(directory / "environment.pfm"),
            projector=IrProjector.from_dict(doc["projector"]),
            atlas_size=int(doc["atlas_size"]),
            albedo_texture=albedo,
            diffuse_shadows=bool(doc.get("diffuse_shadows", True)),
            env_samples_height=int(doc.get("env_samples_height", 12)),
        )
