"""Batched IR observations used for reflectance fitting.

Stored as arrays-of-columns; one row is a single surface observation with
its shading geometry. Back-facing rows (n.l <= 0 or n.v <= 0) are dropped at
construction, as are rows outside the unit intensity range.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .ward import half_vectors

_UNIT_TOL = 1e-6


@dataclass
class IrSamples:
    intensity: np.ndarray  # (N,) L in [0, 1]
    n: np.ndarray  # (N, 3) unit surface normal, world frame
    l: np.ndarray  # (N, 3) unit direction to the light
    v: np.ndarray  # (N, 3) unit direction to the camera
    d: np.ndarray  # (N,) meters to the light
    h: np.ndarray = None  # (N, 3) unit half vector, derived if omitted
    frame_id: np.ndarray = None  # (N,) source frame index
    segment: np.ndarray = None  # (N,) material segment id
    point: np.ndarray = None  # (N, 3) world surface point
    texel: np.ndarray = None  # (N,) atlas texel id (for per-point albedo)

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=np.float64).ravel()
        n_rows = len(self.intensity)
        for name in ("n", "l", "v"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1, 3)
            if len(arr) and np.abs(np.linalg.norm(arr, axis=1) - 1.0).max() > _UNIT_TOL:
                raise ValueError(f"{name} must contain unit vectors")
            setattr(self, name, arr)
        self.d = np.asarray(self.d, dtype=np.float64).ravel()
        if self.h is None:
            self.h = half_vectors(self.v, self.l)
        else:
            self.h = np.asarray(self.h, dtype=np.float64).reshape(-1, 3)
        if self.frame_id is None:
            self.frame_id = np.zeros(n_rows, dtype=np.int64)
        else:
            self.frame_id = np.asarray(self.frame_id, dtype=np.int64).ravel()
        if self.segment is None:
            self.segment = np.zeros(n_rows, dtype=np.int64)
        else:
            self.segment = np.asarray(self.segment, dtype=np.int64).ravel()
        if self.point is None:
            self.point = np.zeros((n_rows, 3))
        else:
            self.point = np.asarray(self.point, dtype=np.float64).reshape(-1, 3)
        if self.texel is None:
            self.texel = np.full(n_rows, -1, dtype=np.int64)
        else:
            self.texel = np.asarray(self.texel, dtype=np.int64).ravel()
        if np.any(self.d <= 0):
            raise ValueError("light distances must be positive")
        keep = (
            (np.sum(self.n * self.l, axis=1) > 0)
            & (np.sum(self.n * self.v, axis=1) > 0)
            & (self.intensity >= 0)
            & (self.intensity <= 1)
        )
        if not keep.all():
            self._apply_mask(keep)

    def _apply_mask(self, mask):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name)[mask])

    def __len__(self) -> int:
        return len(self.intensity)

    def nl(self) -> np.ndarray:
        return np.sum(self.n * self.l, axis=1)

    def nv(self) -> np.ndarray:
        return np.sum(self.n * self.v, axis=1)

    def half_angles(self) -> np.ndarray:
        """Angle between half vector and normal, radians."""
        hn = np.clip(np.sum(self.h * self.n, axis=1), -1.0, 1.0)
        return np.arccos(hn)

    def subset(self, mask) -> "IrSamples":
        out = IrSamples.__new__(IrSamples)
        for f in fields(self):
            setattr(out, f.name, getattr(self, f.name)[mask])
        return out

    @staticmethod
    def concatenate(parts: list["IrSamples"]) -> "IrSamples":
        out = IrSamples.__new__(IrSamples)
        for f in fields(IrSamples):
            setattr(out, f.name, np.concatenate([getattr(p, f.name) for p in parts]))
        return out
