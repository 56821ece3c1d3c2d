"""Ideal pinhole camera model and projection operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DEPTH = 1e-9


class ProjectionError(ValueError):
    """Point cannot be projected (at or behind the camera plane)."""


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def intrinsics(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def scaled(self, factor: float) -> "PinholeCamera":
        """Camera for an image resized by `factor` (e.g. 0.5 per pyramid level).

        Continuous pixel coordinates are measured from the image corner with
        samples at (i + 0.5, j + 0.5), so resizing scales them uniformly.
        """
        return PinholeCamera(
            fx=self.fx * factor,
            fy=self.fy * factor,
            cx=self.cx * factor,
            cy=self.cy * factor,
            width=max(1, int(round(self.width * factor))),
            height=max(1, int(round(self.height * factor))),
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @staticmethod
    def from_dict(d: dict) -> "PinholeCamera":
        return PinholeCamera(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
        )


def project(camera: PinholeCamera, points) -> np.ndarray:
    """Project camera-frame 3D points to pixel coordinates.

    `points` has shape (..., 3); raises ProjectionError if any point lies at
    or behind the camera plane. Use `project_valid` for mixed batches.
    """
    p = np.asarray(points, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= MIN_DEPTH):
        raise ProjectionError("point at or behind the camera plane")
    x = p[..., 0] / z * camera.fx + camera.cx
    y = p[..., 1] / z * camera.fy + camera.cy
    return np.stack([x, y], axis=-1)


def project_valid(camera: PinholeCamera, points):
    """Batch projection returning (pixels, valid mask); invalid rows are NaN."""
    p = np.asarray(points, dtype=np.float64)
    z = p[..., 2]
    valid = z > MIN_DEPTH
    zs = np.where(valid, z, 1.0)
    px = np.stack(
        [p[..., 0] / zs * camera.fx + camera.cx, p[..., 1] / zs * camera.fy + camera.cy],
        axis=-1,
    )
    px[~valid] = np.nan
    return px, valid


def backproject(camera: PinholeCamera, pixels, depth) -> np.ndarray:
    """Lift pixels with depth (camera-frame z, meters) to 3D camera-frame points."""
    x = np.asarray(pixels, dtype=np.float64)
    z = np.asarray(depth, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("depth must be positive")
    px = (x[..., 0] - camera.cx) / camera.fx * z
    py = (x[..., 1] - camera.cy) / camera.fy * z
    return np.stack([px, py, z], axis=-1)


def pixel_grid(camera: PinholeCamera) -> tuple[np.ndarray, np.ndarray]:
    """Continuous coordinates of every pixel center: image pixel (i, j) samples
    the scene at (i + 0.5, j + 0.5)."""
    u, v = np.meshgrid(
        np.arange(camera.width, dtype=np.float64) + 0.5,
        np.arange(camera.height, dtype=np.float64) + 0.5,
    )
    return u, v


def pixel_rays(camera: PinholeCamera) -> np.ndarray:
    """Unit ray direction through every pixel center, shape (H, W, 3)."""
    u, v = pixel_grid(camera)
    d = np.stack(
        [(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, np.ones_like(u)],
        axis=-1,
    )
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def backproject_depth_map(camera: PinholeCamera, depth: np.ndarray) -> np.ndarray:
    """Per-pixel camera-frame points from a dense depth map (invalid depth -> 0)."""
    u, v = pixel_grid(camera)
    z = np.asarray(depth, dtype=np.float64)
    pts = np.stack(
        [(u - camera.cx) / camera.fx * z, (v - camera.cy) / camera.fy * z, z], axis=-1
    )
    return pts
