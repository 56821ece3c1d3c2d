"""Projector intensity and sensor gamma recovery from a matte white target.

Fits L = (kappa * (n.l)/(pi d^2))^gamma to observed IR intensities by damped
least squares, with kappa optimized in log space for positivity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .irmodel import ir_intensity, shading_factor
from .lsq import levenberg_marquardt

GAMMA_MAX = 2.0
_GAMMA_MIN = 1e-3


class DegenerateSamplesError(ValueError):
    """Samples lack shading variation; kappa and gamma are not separable."""


@dataclass
class CalibrationSamples:
    """Batched observations of the unit-albedo target."""

    intensity: np.ndarray  # L in [0, 1]
    nl: np.ndarray  # n.l in (0, 1]
    distance: np.ndarray  # meters, > 0

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=np.float64).ravel()
        self.nl = np.asarray(self.nl, dtype=np.float64).ravel()
        self.distance = np.asarray(self.distance, dtype=np.float64).ravel()
        if not (len(self.intensity) == len(self.nl) == len(self.distance)):
            raise ValueError("sample arrays must have equal length")
        if np.any((self.intensity < 0) | (self.intensity > 1)):
            raise ValueError("intensities must lie in [0, 1]")
        if np.any(self.distance <= 0):
            raise ValueError("distances must be positive")
        if np.any((self.nl <= 0) | (self.nl > 1 + 1e-12)):
            raise ValueError("n.l must lie in (0, 1]")

    def __len__(self) -> int:
        return len(self.intensity)


@dataclass
class IrCalibration:
    kappa: float
    gamma: float
    rms: float
    converged: bool = True

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.gamma <= GAMMA_MAX:
            raise ValueError(f"gamma must lie in (0, {GAMMA_MAX}]")

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "gamma": self.gamma,
            "rms": self.rms,
            "converged": self.converged,
        }

    @staticmethod
    def from_dict(d: dict) -> "IrCalibration":
        return IrCalibration(
            kappa=float(d["kappa"]),
            gamma=float(d["gamma"]),
            rms=float(d["rms"]),
            converged=bool(d.get("converged", True)),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @staticmethod
    def load(path) -> "IrCalibration":
        with open(path) as fh:
            return IrCalibration.from_dict(json.load(fh))


def predict(calib: IrCalibration, nl, d) -> np.ndarray:
    """Model intensity of the white target, clamped to [0, 1]."""
    return ir_intensity(calib.kappa, calib.gamma, nl, d, rho=1.0, f_s=0.0)


def calibrate(samples: CalibrationSamples) -> IrCalibration:
    """Recover (kappa, gamma) from >= 2 samples with distinct shading."""
    if len(samples) < 2:
        raise DegenerateSamplesError("need at least 2 samples")
    g = shading_factor(samples.nl, samples.distance)
    if g.max() - g.min() < 1e-12 * max(g.max(), 1.0):
        raise DegenerateSamplesError(
            "all samples share one shading value; kappa and gamma are coupled"
        )
    L = samples.intensity
    # initialization: gamma=1 makes kappa linear in the data
    with np.errstate(divide="ignore"):
        kappa0 = float(np.median(L * np.pi / g))
    kappa0 = max(kappa0, 1e-6)

    def residual(x):
        kappa, gamma = np.exp(x[0]), x[1]
        return L - np.power(np.maximum(kappa * g / np.pi, 0.0), gamma)

    def jacobian(x):
        kappa, gamma = np.exp(x[0]), x[1]
        base = np.maximum(kappa * g / np.pi, 1e-300)
        model = np.power(base, gamma)
        jac = np.empty((len(L), 2))
        jac[:, 0] = -model * gamma  # d model / d log kappa
        jac[:, 1] = -model * np.log(base)
        return jac

    res = levenberg_marquardt(
        residual,
        np.array([np.log(kappa0), 1.0]),
        jacobian_fn=jacobian,
        bounds=(np.array([-50.0, _GAMMA_MIN]), np.array([50.0, GAMMA_MAX])),
    )
    return IrCalibration(
        kappa=float(np.exp(res.x[0])),
        gamma=float(res.x[1]),
        rms=res.rms,
        converged=res.converged,
    )


def samples_from_frames(
    frames, camera, projector_offset, saturation: float = 0.999
) -> CalibrationSamples:
    """Pool unit-albedo target observations from captured IR+depth frames.

    Geometry comes from the depth maps via the standard sparse IR sampling;
    saturated readings are dropped since they carry no shading information.
    """
    from .sensorsim import subsample_ir

    intensity, nl, dist = [], [], []
    for f in frames:
        s = subsample_ir(f.ir, f.depth, camera, f.pose, projector_offset, frame_id=f.index)
        keep = s.intensity < saturation
        intensity.append(s.intensity[keep])
        nl.append(s.nl()[keep])
        dist.append(s.d[keep])
    if not intensity:
        raise DegenerateSamplesError("no frames provided")
    return CalibrationSamples(
        intensity=np.concatenate(intensity),
        nl=np.concatenate(nl),
        distance=np.concatenate(dist),
    )
