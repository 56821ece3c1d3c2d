"""Forward model of the active-IR channel.

The projector is treated as a point source riding with the camera; a surface
point with normal n, unit direction l to the source, and distance d receives
irradiance proportional to (n.l)/d^2. The sensor applies gamma compression,
so the recorded intensity of a surface with IR diffuse albedo rho and glossy
lobe value f_s is

    L = clip((kappa * (n.l)/d^2 * (rho/pi + f_s))^gamma, 0, 1)

A unit-albedo matte target reduces this to (kappa*(n.l)/(pi d^2))^gamma, the
model fitted by calibration.
"""

from __future__ import annotations

import numpy as np


def shading_factor(nl, d) -> np.ndarray:
    """Geometric falloff g = (n.l)/d^2 of the on-board point source."""
    return np.asarray(nl, dtype=np.float64) / np.square(np.asarray(d, dtype=np.float64))


def ir_intensity(kappa: float, gamma: float, nl, d, rho=1.0, f_s=0.0) -> np.ndarray:
    linear = kappa * shading_factor(nl, d) * (np.asarray(rho) / np.pi + np.asarray(f_s))
    return np.clip(np.power(np.maximum(linear, 0.0), gamma), 0.0, 1.0)
