"""Equirectangular environment maps with exact per-texel solid angles.

Directions are world-frame unit vectors with +z up. A map of shape (H, 2H)
covers the full sphere: row r spans polar angle [r, r+1] * pi/H measured from
+z, column c spans azimuth [c, c+1] * 2pi/W measured from -pi (so azimuth
increases with column). Per-texel solid angles use the exact spherical-cap
difference, so they sum to 4*pi to machine precision at any resolution.
"""

from __future__ import annotations

import numpy as np

from .imgio import read_pfm, write_pfm


class EnvironmentMap:
    def __init__(self, radiance: np.ndarray):
        radiance = np.asarray(radiance, dtype=np.float64)
        if radiance.ndim == 2:
            radiance = np.repeat(radiance[:, :, None], 3, axis=2)
        if radiance.ndim != 3 or radiance.shape[2] != 3:
            raise ValueError("radiance must be (H, W) or (H, W, 3)")
        h, w = radiance.shape[:2]
        if w != 2 * h:
            raise ValueError("equirectangular maps must have width = 2 * height")
        self.radiance = radiance
        self.height = h
        self.width = w

    # -- geometry ----------------------------------------------------------

    def row_solid_angles(self) -> np.ndarray:
        """(H,) solid angle of one texel in each row; exact cap difference."""
        edges = np.cos(np.arange(self.height + 1) * np.pi / self.height)
        return (edges[:-1] - edges[1:]) * (2.0 * np.pi / self.width)

    def texel_solid_angles(self) -> np.ndarray:
        return np.broadcast_to(
            self.row_solid_angles()[:, None], (self.height, self.width)
        )

    def texel_directions(self) -> np.ndarray:
        """(H, W, 3) unit direction at every texel center."""
        theta = (np.arange(self.height) + 0.5) * np.pi / self.height
        phi = -np.pi + (np.arange(self.width) + 0.5) * 2.0 * np.pi / self.width
        st, ct = np.sin(theta), np.cos(theta)
        cp, sp = np.cos(phi), np.sin(phi)
        return np.stack(
            [st[:, None] * cp[None, :], st[:, None] * sp[None, :],
             np.broadcast_to(ct[:, None], (self.height, self.width))],
            axis=-1,
        )

    def direction_to_texel(self, dirs) -> tuple[np.ndarray, np.ndarray]:
        """Nearest texel (row, col) containing each unit direction."""
        d = np.asarray(dirs, dtype=np.float64)
        theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
        phi = np.arctan2(d[..., 1], d[..., 0])
        row = np.minimum((theta / np.pi * self.height).astype(int), self.height - 1)
        col = ((phi + np.pi) / (2 * np.pi) * self.width).astype(int) % self.width
        return row, col

    def sample(self, dirs) -> np.ndarray:
        """Nearest-texel radiance lookup for unit directions (..., 3)."""
        row, col = self.direction_to_texel(dirs)
        return self.radiance[row, col]

    # -- operations ---------------------------------------------------------

    def total_power(self) -> np.ndarray:
        return np.einsum("hwc,hw->c", self.radiance, self.texel_solid_angles())

    def downsampled(self, new_height: int) -> "EnvironmentMap":
        """Power-preserving box downsample to (new_height, 2*new_height)."""
        if self.height % new_height != 0:
            raise ValueError("new height must divide the current height")
        f = self.height // new_height
        w = self.radiance * self.texel_solid_angles()[:, :, None]
        pooled = w.reshape(new_height, f, 2 * new_height, f, 3).sum(axis=(1, 3))
        coarse = EnvironmentMap(np.zeros((new_height, 2 * new_height, 3)))
        coarse.radiance = pooled / coarse.texel_solid_angles()[:, :, None]
        return coarse

    def rolled(self, texels: int) -> "EnvironmentMap":
        """Rotation about +z by texels * (2*pi/W); exact for whole texels."""
        return EnvironmentMap(np.roll(self.radiance, texels, axis=1))

    def save(self, path) -> None:
        write_pfm(path, self.radiance.astype(np.float32))

    @staticmethod
    def load(path) -> "EnvironmentMap":
        return EnvironmentMap(read_pfm(path))


def constant_environment(height: int, value=1.0) -> EnvironmentMap:
    rad = np.broadcast_to(
        np.asarray(value, dtype=np.float64), (height, 2 * height, 3)
    ).copy() if np.ndim(value) else np.full((height, 2 * height, 3), float(value))
    return EnvironmentMap(rad)


def blob_environment(
    height: int,
    blobs,
    ambient=0.05,
) -> EnvironmentMap:
    """Smooth test environment: Gaussian lobes on the sphere plus ambient.

    `blobs` is a sequence of (direction, angular_sigma_radians, rgb_peak).
    """
    env = constant_environment(height, ambient)
    dirs = env.texel_directions()
    for center, sigma, peak in blobs:
        c = np.asarray(center, dtype=np.float64)
        c = c / np.linalg.norm(c)
        ang = np.arccos(np.clip(dirs @ c, -1.0, 1.0))
        env.radiance += np.exp(-0.5 * (ang / sigma) ** 2)[:, :, None] * np.asarray(
            peak, dtype=np.float64
        )
    return env
