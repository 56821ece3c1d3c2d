"""Ward glossy BRDF (original 1992 normalization) and material records.

The lobe is evaluated in its robust half-vector form: with h the normalized
bisector of v and l,

    f_s = rho_s * exp(-[(h.t/ax)^2 + (h.b/ay)^2] / (h.n)^2)
          / (4 pi ax ay sqrt((n.l)(n.v)))

which equals the tan/cos form exp(-tan^2(th)(cos^2(ph)/ax^2 + sin^2(ph)/ay^2))
since h.t = sin(th)cos(ph), h.b = sin(th)sin(ph), h.n = cos(th). The isotropic
case reduces to exp(-(1 - (h.n)^2) / ((h.n)^2 a^2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import rotation_between

RHO_S_MAX = 1.5
ALPHA_MIN = 0.005
ALPHA_MAX = 1.0
_GRAZING_EPS = 1e-8


@dataclass(frozen=True)
class WardParams:
    rho_s: float
    alpha_x: float
    alpha_y: float | None = None
    isotropic: bool = True

    def __post_init__(self):
        if self.alpha_y is None:
            object.__setattr__(self, "alpha_y", self.alpha_x)
        if self.isotropic and self.alpha_x != self.alpha_y:
            raise ValueError("isotropic parameters require alpha_x == alpha_y")
        if not 0.0 <= self.rho_s <= RHO_S_MAX:
            raise ValueError(f"rho_s must lie in [0, {RHO_S_MAX}]")
        for a in (self.alpha_x, self.alpha_y):
            if not ALPHA_MIN <= a <= ALPHA_MAX:
                raise ValueError(f"roughness must lie in [{ALPHA_MIN}, {ALPHA_MAX}]")

    def to_dict(self) -> dict:
        return {
            "rho_s": self.rho_s,
            "alpha_x": self.alpha_x,
            "alpha_y": self.alpha_y,
            "isotropic": self.isotropic,
        }

    @staticmethod
    def from_dict(d: dict) -> "WardParams":
        return WardParams(
            rho_s=float(d["rho_s"]),
            alpha_x=float(d["alpha_x"]),
            alpha_y=float(d["alpha_y"]),
            isotropic=bool(d["isotropic"]),
        )


@dataclass(frozen=True)
class TangentFrame:
    """Shared tangent/binormal attached to a reference normal.

    On curved surfaces the frame is carried to each sample by the minimal
    rotation taking the reference normal onto the sample normal.
    """

    tangent: np.ndarray
    binormal: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tangent, dtype=np.float64)
        b = np.asarray(self.binormal, dtype=np.float64)
        n = np.asarray(self.normal, dtype=np.float64)
        object.__setattr__(self, "tangent", t)
        object.__setattr__(self, "binormal", b)
        object.__setattr__(self, "normal", n)
        m = np.stack([t, b, n])
        if np.abs(m @ m.T - np.eye(3)).max() > 1e-6:
            raise ValueError("tangent frame must be orthonormal")

    def transported(self, normals) -> tuple[np.ndarray, np.ndarray]:
        """Tangent and binormal carried onto each sample normal, (N, 3) each.

        Uses the minimal rotation a -> b applied as
        v' = v + w x v + w x (w x v) / (1 + a.b), w = a x b; near-antipodal
        normals fall back to a per-row exact rotation.
        """
        n_x = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
        a = self.normal
        c = n_x @ a
        w = np.cross(np.broadcast_to(a, n_x.shape), n_x)
        safe = c > -1.0 + 1e-9

        def carry(vec):
            wxv = np.cross(w, np.broadcast_to(vec, n_x.shape))
            wwxv = np.cross(w, wxv)
            denom = np.where(safe, 1.0 + c, 1.0)
            return vec + wxv + wwxv / denom[:, None]

        t_out = carry(self.tangent)
        b_out = carry(self.binormal)
        if not safe.all():
            for i in np.nonzero(~safe)[0]:
                rot = rotation_between(a, n_x[i])
                t_out[i] = rot @ self.tangent
                b_out[i] = rot @ self.binormal
        return t_out, b_out

    def to_dict(self) -> dict:
        return {
            "tangent": self.tangent.tolist(),
            "binormal": self.binormal.tolist(),
            "normal": self.normal.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "TangentFrame":
        return TangentFrame(
            tangent=np.asarray(d["tangent"]),
            binormal=np.asarray(d["binormal"]),
            normal=np.asarray(d["normal"]),
        )


def half_vectors(v, l) -> np.ndarray:
    h = np.asarray(v, dtype=np.float64) + np.asarray(l, dtype=np.float64)
    lens = np.linalg.norm(h, axis=-1, keepdims=True)
    return h / np.where(lens > 0, lens, 1.0)


def ward_eval(params: WardParams, n, v, l, tangent=None, binormal=None) -> np.ndarray:
    """BRDF value (1/sr) for unit vectors n, v, l of shape (..., 3).

    Grazing configurations with (n.l)(n.v) < 1e-8 return 0. Anisotropic
    evaluation requires per-sample tangent/binormal arrays.
    """
    n = np.asarray(n, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    nl = np.sum(n * l, axis=-1)
    nv = np.sum(n * v, axis=-1)
    geom = nl * nv
    ok = geom >= _GRAZING_EPS
    h = half_vectors(v, l)
    hn = np.sum(h * n, axis=-1)
    hn2 = np.where(hn > 0, hn, 1.0) ** 2
    if params.isotropic or (tangent is None and params.alpha_x == params.alpha_y):
        expo = -(1.0 - hn2) / (hn2 * params.alpha_x**2)
    else:
        if tangent is None or binormal is None:
            raise ValueError("anisotropic evaluation needs tangent and binormal")
        ht = np.sum(h * np.asarray(tangent, dtype=np.float64), axis=-1)
        hb = np.sum(h * np.asarray(binormal, dtype=np.float64), axis=-1)
        expo = -((ht / params.alpha_x) ** 2 + (hb / params.alpha_y) ** 2) / hn2
    norm = 4.0 * np.pi * params.alpha_x * params.alpha_y
    with np.errstate(divide="ignore", invalid="ignore"):
        val = params.rho_s * np.exp(expo) / (norm * np.sqrt(np.maximum(geom, 0.0)))
    return np.where(ok & (hn > 0), val, 0.0)


@dataclass
class MaterialModel:
    """Fitted reflectance of one material segment.

    The glossy tint is white by construction (a single set of parameters is
    shared by all color channels); `rho` is the IR-band diffuse albedo,
    either a scalar or a per-sample-point array.
    """

    segment: int
    params: WardParams
    rho: float | np.ndarray
    frame: TangentFrame | None = None
    rms: float = 0.0
    diffuse_only: bool = False
    tint: tuple = field(default=(1.0, 1.0, 1.0))
    rho_texels: np.ndarray | None = None  # atlas texel ids when rho is a map
    converged: bool = True

    def rho_scalar(self) -> float:
        return float(np.mean(self.rho))

    def to_dict(self) -> dict:
        rho = self.rho
        return {
            "segment": self.segment,
            **self.params.to_dict(),
            "rho": rho.tolist() if isinstance(rho, np.ndarray) else float(rho),
            "rho_texels": self.rho_texels.tolist() if self.rho_texels is not None else None,
            "tangent_frame": self.frame.to_dict() if self.frame else None,
            "rms": self.rms,
            "diffuse_only": self.diffuse_only,
            "converged": self.converged,
        }

    @staticmethod
    def from_dict(d: dict) -> "MaterialModel":
        rho = d["rho"]
        texels = d.get("rho_texels")
        return MaterialModel(
            segment=int(d["segment"]),
            params=WardParams.from_dict(d),
            rho=np.asarray(rho) if isinstance(rho, list) else float(rho),
            frame=TangentFrame.from_dict(d["tangent_frame"]) if d.get("tangent_frame") else None,
            rms=float(d.get("rms", 0.0)),
            diffuse_only=bool(d.get("diffuse_only", False)),
            rho_texels=np.asarray(texels, dtype=np.int64) if texels is not None else None,
            converged=bool(d.get("converged", True)),
        )
