"""Mesh file I/O: Wavefront OBJ and binary little-endian PLY.

Both formats carry positions, vertex normals, and the per-face atlas UVs
(OBJ `vt` / PLY per-face `texcoord` lists).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh


def save_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for n in mesh.normals:
        lines.append(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}")
    has_uv = mesh.uv_charts is not None
    if has_uv:
        for chart in mesh.uv_charts:
            for uv in chart:
                lines.append(f"vt {uv[0]:.9g} {uv[1]:.9g}")
    for f, face in enumerate(mesh.faces):
        if has_uv:
            t = 3 * f
            lines.append(
                "f "
                + " ".join(
                    f"{face[k] + 1}/{t + k + 1}/{face[k] + 1}" for k in range(3)
                )
            )
        else:
            lines.append("f " + " ".join(f"{face[k] + 1}//{face[k] + 1}" for k in range(3)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path) -> TriangleMesh:
    verts, norms, uvs = [], [], []
    faces, face_uv_idx = [], []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif tag == "vn":
            norms.append([float(x) for x in parts[1:4]])
        elif tag == "vt":
            uvs.append([float(x) for x in parts[1:3]])
        elif tag == "f":
            if len(parts) != 4:
                raise ValueError("only triangle faces are supported")
            vi, ti = [], []
            for token in parts[1:4]:
                fields = token.split("/")
                vi.append(int(fields[0]) - 1)
                if len(fields) > 1 and fields[1]:
                    ti.append(int(fields[1]) - 1)
            faces.append(vi)
            face_uv_idx.append(ti if len(ti) == 3 else None)
    charts = None
    if uvs and all(t is not None for t in face_uv_idx):
        uvs = np.asarray(uvs)
        charts = np.stack([uvs[np.asarray(t)] for t in face_uv_idx])
    return TriangleMesh(
        vertices=np.asarray(verts),
        faces=np.asarray(faces, dtype=np.int64),
        normals=np.asarray(norms) if len(norms) == len(verts) else None,
        uv_charts=charts,
    )


def save_ply(path, mesh: TriangleMesh) -> None:
    has_uv = mesh.uv_charts is not None
    header = [
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {mesh.n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        "property float nx",
        "property float ny",
        "property float nz",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
    ]
    if has_uv:
        header.append("property list uchar float texcoord")
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        vdata = np.hstack([mesh.vertices, mesh.normals]).astype("<f4")
        fh.write(vdata.tobytes())
        for f, face in enumerate(mesh.faces):
            fh.write(struct.pack("<B3i", 3, *[int(i) for i in face]))
            if has_uv:
                uv = mesh.uv_charts[f].reshape(-1).astype(np.float64)
                fh.write(struct.pack("<B6f", 6, *uv))


def load_ply(path) -> TriangleMesh:
    with open(path, "rb") as fh:
        n_vert = n_face = 0
        vert_props: list[str] = []
        face_lists: list[str] = []
        element = None
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "end_header":
                break
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format" and parts[1] != "binary_little_endian":
                raise ValueError("only binary little-endian PLY is supported")
            if parts[0] == "element":
                element = parts[1]
                if element == "vertex":
                    n_vert = int(parts[2])
                elif element == "face":
                    n_face = int(parts[2])
            elif parts[0] == "property":
                if element == "vertex":
                    if parts[1] != "float":
                        raise ValueError("vertex properties must be float")
                    vert_props.append(parts[2])
                elif element == "face":
                    face_lists.append(parts[-1])
        vdata = np.frombuffer(fh.read(4 * len(vert_props) * n_vert), dtype="<f4")
        vdata = vdata.reshape(n_vert, len(vert_props)).astype(np.float64)
        cols = {name: k for k, name in enumerate(vert_props)}
        verts = vdata[:, [cols["x"], cols["y"], cols["z"]]]
        normals = None
        if "nx" in cols:
            normals = vdata[:, [cols["nx"], cols["ny"], cols["nz"]]]
            lens = np.linalg.norm(normals, axis=1, keepdims=True)
            lens[lens == 0] = 1.0
            normals = normals / lens
        faces = np.zeros((n_face, 3), dtype=np.int64)
        charts = np.zeros((n_face, 3, 2)) if "texcoord" in face_lists else None
        for f in range(n_face):
            for name in face_lists:
                (count,) = struct.unpack("<B", fh.read(1))
                if name == "vertex_indices":
                    if count != 3:
                        raise ValueError("only triangle faces are supported")
                    faces[f] = struct.unpack("<3i", fh.read(12))
                elif name == "texcoord":
                    vals = struct.unpack(f"<{count}f", fh.read(4 * count))
                    charts[f] = np.asarray(vals).reshape(3, 2)
                else:
                    fh.read(4 * count)
    return TriangleMesh(vertices=verts, faces=faces, normals=normals, uv_charts=charts)
