"""Texture atlas accumulator and its on-disk formats."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..imgio import linear_to_display, read_pfm, write_pfm, write_png

# one observation record: which texel saw what in which frame, and how much
# it counts. Fixed little-endian layout so sidecars are portable.
OBS_DTYPE = np.dtype(
    [("texel", "<u4"), ("frame", "<u4"), ("rgb", "<f4", (3,)), ("weight", "<f4")]
)


@dataclass
class TextureAtlas:
    """Running weighted mean of linear RGB per texel."""

    size: int
    rgb: np.ndarray | None = None
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("atlas size must be positive")
        if self.rgb is None:
            self.rgb = np.zeros((self.size, self.size, 3))
        if self.weight is None:
            self.weight = np.zeros((self.size, self.size))
        self.rgb = np.asarray(self.rgb, dtype=np.float64)
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.rgb.shape != (self.size, self.size, 3):
            raise ValueError("rgb accumulator shape mismatch")
        if self.weight.shape != (self.size, self.size):
            raise ValueError("weight accumulator shape mismatch")
        if np.any(self.weight < 0):
            raise ValueError("weights must be non-negative")

    def observed_mask(self) -> np.ndarray:
        return self.weight > 0

    def accumulate(self, iy: np.ndarray, ix: np.ndarray, rgb: np.ndarray, w: np.ndarray):
        """Blend new samples into the running mean at integer texel coords.

        Duplicate texels within one call are merged first so the result does
        not depend on sample order.
        """
        w = np.asarray(w, dtype=np.float64)
        keep = w > 0
        if not np.any(keep):
            return
        iy, ix, w = iy[keep], ix[keep], w[keep]
        rgb = np.asarray(rgb, dtype=np.float64)[keep]
        flat = iy * self.size + ix
        sum_w = np.bincount(flat, weights=w, minlength=self.size * self.size)
        sum_c = np.stack(
            [
                np.bincount(flat, weights=w * rgb[:, k], minlength=self.size * self.size)
                for k in range(3)
            ],
            axis=1,
        )
        touched = np.flatnonzero(sum_w > 0)
        ty, tx = touched // self.size, touched % self.size
        w_old = self.weight[ty, tx]
        w_new = w_old + sum_w[touched]
        self.rgb[ty, tx] = (self.rgb[ty, tx] * w_old[:, None] + sum_c[touched]) / w_new[:, None]
        self.weight[ty, tx] = w_new

    def save(self, prefix) -> None:
        """Write <prefix>.pfm (RGB), <prefix>_weight.pfm, <prefix>.png preview."""
        prefix = Path(prefix)
        write_pfm(prefix.with_suffix(".pfm"), self.rgb.astype(np.float32))
        write_pfm(
            prefix.parent / f"{prefix.name}_weight.pfm", self.weight.astype(np.float32)
        )
        preview = np.where(self.observed_mask()[..., None], self.rgb, 0.0)
        write_png(prefix.with_suffix(".png"), linear_to_display(np.clip(preview, 0, 1)))

    @staticmethod
    def load(prefix) -> "TextureAtlas":
        prefix = Path(prefix)
        rgb = np.asarray(read_pfm(prefix.with_suffix(".pfm")), dtype=np.float64)
        weight = np.asarray(
            read_pfm(prefix.parent / f"{prefix.name}_weight.pfm"), dtype=np.float64
        )
        return TextureAtlas(size=rgb.shape[0], rgb=rgb, weight=weight)


def observation_records(texel, frame, rgb, weight) -> np.ndarray:
    """Pack parallel arrays into the sidecar record dtype."""
    n = len(texel)
    rec = np.zeros(n, dtype=OBS_DTYPE)
    rec["texel"] = texel
    rec["frame"] = frame
    rec["rgb"] = rgb
    rec["weight"] = weight
    return rec


def save_observations(path, records: np.ndarray) -> None:
    records = np.asarray(records, dtype=OBS_DTYPE)
    records.tofile(path)


def load_observations(path) -> np.ndarray:
    return np.fromfile(path, dtype=OBS_DTYPE)
