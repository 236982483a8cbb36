"""Legacy ASCII VTK output of polyhedral meshes with nodal fields."""

from pathlib import Path
from typing import Dict, Mapping

import numpy as np

from .exceptions import IoFailure
from .mesh import PolyMesh

__all__ = ["export_vtk", "read_vtk", "VTK_POLYHEDRON"]

VTK_POLYHEDRON = 42


def _point_field(name, values, N, M):
    values = np.asarray(values, dtype=float).ravel()
    if len(values) == N:
        return values
    if len(values) == M:
        out = np.full(N, np.nan)
        out[:M] = values
        return out
    raise IoFailure(f"field '{name}' has length {len(values)}; expected {N} (bulk) or {M} (surface)")


def _face_stream(mesh: PolyMesh, c):
    fids, signs = mesh.cells[c]
    stream = [len(fids)]
    for f, s in zip(fids, signs):
        loop = mesh.faces[f] if s > 0 else mesh.faces[f][::-1]
        stream.append(len(loop))
        stream.extend(int(v) for v in loop)
    return stream


def export_vtk(mesh: PolyMesh, fields: Mapping[str, np.ndarray], path) -> Path:
    """Write ``mesh`` as an UNSTRUCTURED_GRID of polyhedral cells (type 42).

    Each field becomes a POINT_DATA scalar array. Fields of length M (surface)
    are padded with NaN on interior nodes. All fields are checked before the
    file is opened.
    """
    N, M = mesh.num_nodes, mesh.num_boundary_nodes
    data = {}
    for name, values in fields.items():
        if not name or any(ch.isspace() for ch in name):
            raise IoFailure(f"invalid field name {name!r}")
        data[name] = _point_field(name, values, N, M)

    streams = [_face_stream(mesh, c) for c in range(mesh.num_cells)]
    size = sum(len(s) + 1 for s in streams)

    lines = ["# vtk DataFile Version 3.0", "bulk-surface VEM mesh", "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {N} double")
    lines.extend(" ".join(f"{x:.17g}" for x in p) for p in mesh.vertices)
    lines.append(f"CELLS {mesh.num_cells} {size}")
    lines.extend(" ".join(map(str, [len(s)] + s)) for s in streams)
    lines.append(f"CELL_TYPES {mesh.num_cells}")
    lines.extend([str(VTK_POLYHEDRON)] * mesh.num_cells)
    if data:
        lines.append(f"POINT_DATA {N}")
        for name, values in data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend("nan" if np.isnan(x) else f"{x:.17g}" for x in values)

    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return path


def read_vtk(path) -> Dict:
    """Parse a file written by :func:`export_vtk`.

    Returns a dict with ``points`` (N, 3), ``cells`` (list of face lists),
    ``cell_types`` and ``fields`` (name -> array).
    """
    try:
        tokens = Path(path).read_text().split("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if not tokens or not tokens[0].startswith("# vtk DataFile"):
        raise IoFailure("not a legacy VTK file")
    it = iter(tokens[4:] if tokens[3].strip() == "DATASET UNSTRUCTURED_GRID" else [])
    out = {"points": None, "cells": [], "cell_types": [], "fields": {}}
    try:
        for line in it:
            head = line.split()
            if not head:
                continue
            if head[0] == "POINTS":
                n = int(head[1])
                out["points"] = np.array([[float(x) for x in next(it).split()] for _ in range(n)]).reshape(n, 3)
            elif head[0] == "CELLS":
                for _ in range(int(head[1])):
                    vals = [int(x) for x in next(it).split()]
                    stream, faces, k = vals[1:], [], 1
                    for _ in range(stream[0]):
                        m = stream[k]
                        faces.append(stream[k + 1 : k + 1 + m])
                        k += m + 1
                    if len(stream) != vals[0] or k != len(stream):
                        raise IoFailure("inconsistent polyhedron face stream")
                    out["cells"].append(faces)
            elif head[0] == "CELL_TYPES":
                out["cell_types"] = [int(next(it)) for _ in range(int(head[1]))]
            elif head[0] == "POINT_DATA":
                npd = int(head[1])
            elif head[0] == "SCALARS":
                next(it)  # lookup table
                out["fields"][head[1]] = np.array([float(next(it)) for _ in range(npd)])
    except (StopIteration, ValueError, IndexError) as exc:
        raise IoFailure(f"malformed VTK file: {exc}") from exc
    if out["points"] is None:
        raise IoFailure("VTK file has no POINTS section")
    return out
