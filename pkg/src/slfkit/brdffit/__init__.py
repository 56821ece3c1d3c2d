"""Glossy reflectance model: evaluation, per-segment fitting, tangent recovery."""

from .fit import (
    FitError,
    fit_segment,
    predict_intensity,
    residual_and_jacobian,
)
from .samples import IrSamples
from .tangent import (
    BrdfSlice,
    InsufficientViewsError,
    TangentUndeterminedError,
    build_brdf_slice,
    fit_tangent,
)
from .ward import (
    ALPHA_MAX,
    ALPHA_MIN,
    RHO_S_MAX,
    MaterialModel,
    TangentFrame,
    WardParams,
    half_vectors,
    ward_eval,
)

__all__ = [
    "ALPHA_MAX",
    "ALPHA_MIN",
    "RHO_S_MAX",
    "BrdfSlice",
    "FitError",
    "InsufficientViewsError",
    "IrSamples",
    "MaterialModel",
    "TangentFrame",
    "TangentUndeterminedError",
    "WardParams",
    "build_brdf_slice",
    "fit_segment",
    "fit_tangent",
    "half_vectors",
    "predict_intensity",
    "residual_and_jacobian",
    "ward_eval",
]
