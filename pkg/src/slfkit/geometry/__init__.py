"""Core geometric types: cameras, rigid poses, triangle meshes, texture atlases."""

from .atlas import (
    AtlasCoord,
    AtlasPackingError,
    AtlasTables,
    barycentric_2d,
    build_atlas_tables,
    count_chart_overlaps,
    dilate_into_gutter,
    parameterize_atlas,
    surface_to_atlas,
    vertex_uvs,
)
from .camera import (
    MIN_DEPTH,
    PinholeCamera,
    ProjectionError,
    backproject,
    backproject_depth_map,
    pixel_grid,
    pixel_rays,
    project,
    project_valid,
)
from .mesh import TriangleMesh, undirected_edges, vertex_normals
from .meshio import load_obj, load_ply, save_obj, save_ply
from .pose import (
    Pose,
    look_at,
    pose_error,
    rotation_about_axis,
    rotation_between,
    se3_exp,
    skew,
    so3_exp,
    so3_log,
    transform,
)

__all__ = [
    "AtlasCoord",
    "AtlasPackingError",
    "AtlasTables",
    "MIN_DEPTH",
    "PinholeCamera",
    "Pose",
    "ProjectionError",
    "TriangleMesh",
    "backproject",
    "backproject_depth_map",
    "barycentric_2d",
    "build_atlas_tables",
    "count_chart_overlaps",
    "dilate_into_gutter",
    "load_obj",
    "load_ply",
    "look_at",
    "parameterize_atlas",
    "pixel_grid",
    "pixel_rays",
    "pose_error",
    "project",
    "project_valid",
    "rotation_about_axis",
    "rotation_between",
    "save_obj",
    "save_ply",
    "se3_exp",
    "skew",
    "so3_exp",
    "so3_log",
    "surface_to_atlas",
    "transform",
    "undirected_edges",
    "vertex_normals",
    "vertex_uvs",
]
