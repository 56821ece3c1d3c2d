"""Probability providers for segmentation.

A provider turns observations into (H, W, K) probability images or directly
into per-vertex probabilities. Classifier quality is out of scope, so two
simple providers are included: an oracle reading known labels with optional
corruption (for controlled experiments) and a k-means clustering of vertex
color + normal (for scenes without known labels).
"""

from __future__ import annotations

import numpy as np
from scipy.cluster.vq import kmeans2

from .mrf import VertexProbabilities


def oracle_probabilities(
    labels: np.ndarray,
    n_classes: int,
    softness: float = 0.9,
    flip_prob: float = 0.0,
    seed: int = 0,
) -> VertexProbabilities:
    """Probabilities from known per-vertex labels, optionally corrupted.

    Each vertex puts `softness` mass on its (possibly flipped) label and
    spreads the rest uniformly. `flip_prob` reassigns a vertex to a random
    other class before softening, simulating classifier mistakes.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes < 1:
        raise ValueError("n_classes must be at least 1")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= n_classes:
        raise ValueError("labels out of range for n_classes")
    if not 0.0 < softness <= 1.0:
        raise ValueError("softness must be in (0, 1]")
    if not 0.0 <= flip_prob < 1.0:
        raise ValueError("flip_prob must be in [0, 1)")
    rng = np.random.default_rng(seed)
    n_v = len(labels)
    noisy = labels.copy()
    if flip_prob > 0 and n_classes > 1:
        flip = rng.random(n_v) < flip_prob
        shift = rng.integers(1, n_classes, size=n_v)
        noisy[flip] = (noisy[flip] + shift[flip]) % n_classes
    p = np.full((n_v, n_classes), (1.0 - softness) / n_classes)
    p[np.arange(n_v), noisy] += softness
    return VertexProbabilities(p, np.ones(n_v, dtype=np.int64))


def kmeans_probabilities(
    colors: np.ndarray,
    normals: np.ndarray,
    n_classes: int,
    temperature: float = 0.05,
    normal_weight: float = 0.5,
    seed: int = 0,
) -> VertexProbabilities:
    """Cluster vertices by color and orientation; soft-assign by distance.

    Features are [color, normal_weight * normal]; probabilities come from a
    softmax over negative squared distances to the k-means centroids, scaled
    by `temperature`.
    """
    colors = np.asarray(colors, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    if colors.ndim == 1:
        colors = colors[:, None]
    if len(colors) != len(normals):
        raise ValueError("colors and normals must align")
    if n_classes < 1:
        raise ValueError("n_classes must be at least 1")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    feats = np.hstack([colors, normal_weight * normals])
    rng = np.random.default_rng(seed)
    centroids, _ = kmeans2(feats, n_classes, minit="++", seed=rng)
    d2 = np.sum((feats[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    logits = -d2 / temperature
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return VertexProbabilities(p, np.ones(len(feats), dtype=np.int64))
