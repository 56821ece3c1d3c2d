"""Image file I/O: PFM for float data, PNG for previews, gamma helpers."""

from __future__ import annotations

import numpy as np
from PIL import Image

DISPLAY_GAMMA = 2.2


def write_pfm(path, image: np.ndarray) -> None:
    """Store a float image (H, W) or (H, W, 3) as little-endian PFM."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 2:
        header = "Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        header = "PF"
    else:
        raise ValueError("PFM supports single- or three-channel images")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"{header}\n{w} {h}\n-1.0\n".encode("ascii"))
        # PFM stores rows bottom to top
        fh.write(np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        if header not in ("Pf", "PF"):
            raise ValueError(f"not a PFM file: header {header!r}")
        dims = fh.readline().decode("ascii").split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().decode("ascii").strip())
        endian = "<" if scale < 0 else ">"
        channels = 3 if header == "PF" else 1
        data = np.frombuffer(fh.read(4 * w * h * channels), dtype=f"{endian}f4")
    img = data.reshape(h, w, channels)[::-1]
    if abs(scale) not in (0.0, 1.0):
        img = img * abs(scale)
    img = np.ascontiguousarray(img.astype(np.float32))
    return img[..., 0] if channels == 1 else img


def write_png(path, image: np.ndarray) -> None:
    """Store uint8/uint16 images directly; float images are treated as linear
    [0, 1] radiance and display-gamma encoded."""
    img = np.asarray(image)
    if img.dtype in (np.uint8, np.uint16):
        Image.fromarray(img).save(path)
        return
    encoded = linear_to_display(np.clip(img, 0.0, 1.0))
    Image.fromarray((encoded * 255.0 + 0.5).astype(np.uint8)).save(path)


def read_png(path) -> np.ndarray:
    return np.asarray(Image.open(path))


def linear_to_display(img: np.ndarray, gamma: float = DISPLAY_GAMMA) -> np.ndarray:
    return np.power(np.clip(img, 0.0, None), 1.0 / gamma)


def display_to_linear(img: np.ndarray, gamma: float = DISPLAY_GAMMA) -> np.ndarray:
    return np.power(np.clip(img, 0.0, None), gamma)


def greyscale(rgb: np.ndarray) -> np.ndarray:
    """Luma of a linear RGB image (ITU-R 601 weights)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


def bilinear_sample(image: np.ndarray, x, y) -> np.ndarray:
    """Sample an image at continuous coordinates with samples at (i + 0.5).

    Coordinates are clamped to the image border. Works for (H, W) and
    (H, W, C) images; x, y may be arrays of any matching shape.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    tx = np.clip(np.asarray(x, dtype=np.float64) - 0.5, 0.0, w - 1.0)
    ty = np.clip(np.asarray(y, dtype=np.float64) - 0.5, 0.0, h - 1.0)
    x0 = np.minimum(tx.astype(int), w - 2) if w > 1 else np.zeros_like(tx, dtype=int)
    y0 = np.minimum(ty.astype(int), h - 2) if h > 1 else np.zeros_like(ty, dtype=int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = tx - x0
    fy = ty - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )
