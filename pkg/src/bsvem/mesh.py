"""Polyhedral bulk mesh with its induced polygonal surface.

Faces are stored once as vertex loops. A cell lists its faces together with a
sign: ``+1`` when the stored loop is counter-clockwise seen from outside the
cell, ``-1`` when it must be reversed. Vertices are ordered boundary-first:
indices ``0 .. M-1`` are exactly the vertices of the boundary faces, so the
bulk-to-surface restriction is a slice and never a matrix.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import IoFailure, OpenSurface, ValidationError

__all__ = [
    "PolyMesh",
    "SurfaceMesh",
    "extract_surface",
    "boundary_first_permutation",
    "reorder_boundary_first",
    "restrict_to_surface",
    "prolong_from_surface",
    "save_mesh",
    "load_mesh",
]


@dataclass(frozen=True, eq=False)
class PolyMesh:
    vertices: np.ndarray
    faces: Tuple[np.ndarray, ...]
    cells: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    boundary_faces: np.ndarray
    num_boundary_nodes: int
    cube_side: Optional[float] = None
    h_nominal: Optional[float] = None
    cube_cells: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "faces", tuple(np.asarray(f, dtype=np.int64) for f in self.faces))
        object.__setattr__(
            self,
            "cells",
            tuple((np.asarray(f, dtype=np.int64), np.asarray(s, dtype=float)) for f, s in self.cells),
        )
        object.__setattr__(self, "boundary_faces", np.asarray(self.boundary_faces, dtype=np.int64))
        if self.cube_cells is None:
            object.__setattr__(self, "cube_cells", _detect_cubes(self))
        else:
            object.__setattr__(self, "cube_cells", np.asarray(self.cube_cells, dtype=bool))
        self.vertices.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_exterior_cells(self) -> int:
        return int(self.num_cells - np.count_nonzero(self.cube_cells))

    @cached_property
    def face_owners(self) -> List[List[Tuple[int, float]]]:
        """For each face, the ``(cell, sign)`` pairs that use it."""
        owners = [[] for _ in self.faces]
        for c, (fids, signs) in enumerate(self.cells):
            for f, s in zip(fids, signs):
                owners[f].append((c, float(s)))
        return owners

    @cached_property
    def cell_nodes(self) -> List[np.ndarray]:
        """Local dof order of each cell.

        Cubes use the canonical corner order ``bx + 2 by + 4 bz`` so that the
        cached reference-cube matrices apply; other cells list vertices in
        order of first appearance along their faces.
        """
        out = []
        for c, (fids, _) in enumerate(self.cells):
            ids = _first_appearance(self.faces[f] for f in fids)
            if self.cube_cells[c]:
                ids = _canonical_cube_order(self.vertices, ids)
            out.append(ids)
        return out

    def cell_loops(self, c) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Node ids of cell ``c`` and its face loops in local indices, oriented outward."""
        nodes = self.cell_nodes[c]
        local = {int(g): i for i, g in enumerate(nodes)}
        loops = []
        fids, signs = self.cells[c]
        for f, s in zip(fids, signs):
            loop = [local[int(g)] for g in self.faces[f]]
            loops.append(np.array(loop if s > 0 else loop[::-1]))
        return nodes, loops


def _first_appearance(loops) -> np.ndarray:
    seen = {}
    for loop in loops:
        for v in loop:
            seen.setdefault(int(v), None)
    return np.fromiter(seen.keys(), dtype=np.int64)


def _canonical_cube_order(vertices, ids):
    p = vertices[ids]
    lo = p.min(axis=0)
    ext = p.max(axis=0) - lo
    bits = np.rint((p - lo) / ext).astype(int)
    code = bits[:, 0] + 2 * bits[:, 1] + 4 * bits[:, 2]
    out = np.empty(8, dtype=np.int64)
    out[code] = ids
    return out


def _detect_cubes(mesh: "PolyMesh") -> np.ndarray:
    """Flag axis-aligned cubic cells of side ``mesh.cube_side``."""
    flags = np.zeros(len(mesh.cells), dtype=bool)
    side = mesh.cube_side
    if side is None:
        return flags
    for c, (fids, _) in enumerate(mesh.cells):
        if len(fids) != 6 or any(len(mesh.faces[f]) != 4 for f in fids):
            continue
        ids = _first_appearance(mesh.faces[f] for f in fids)
        if len(ids) != 8:
            continue
        p = mesh.vertices[ids]
        lo, hi = p.min(axis=0), p.max(axis=0)
        if not np.allclose(hi - lo, side, rtol=1e-12, atol=0.0):
            continue
        corner = np.isclose(p, lo, rtol=0, atol=1e-12 * side) | np.isclose(p, hi, rtol=0, atol=1e-12 * side)
        if corner.all():
            code = np.rint((p - lo) / (hi - lo)).astype(int) @ np.array([1, 2, 4])
            flags[c] = len(set(code.tolist())) == 8
    return flags


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Boundary polygons (outward loops) over the first ``M`` bulk vertices."""

    faces: Tuple[np.ndarray, ...]
    vertex_positions: np.ndarray
    bulk_face_ids: np.ndarray

    @property
    def num_nodes(self):
        return len(self.vertex_positions)


def extract_surface(mesh: PolyMesh) -> SurfaceMesh:
    """Boundary faces of ``mesh`` as a closed, outward-oriented surface.

    Raises
    ------
    OpenSurface
        If some boundary edge is not shared by exactly two boundary faces,
        or the orientation is inconsistent.
    """
    M = mesh.num_boundary_nodes
    loops = []
    for f in mesh.boundary_faces:
        owners = mesh.face_owners[f]
        if len(owners) != 1:
            raise OpenSurface(f"boundary face {f} has {len(owners)} owning cells")
        loop = mesh.faces[f]
        if loop.max() >= M:
            raise ValidationError("mesh is not ordered boundary-first")
        loops.append(loop if owners[0][1] > 0 else loop[::-1].copy())

    directed = set()
    for loop in loops:
        for a, b in zip(loop, np.roll(loop, -1)):
            e = (int(a), int(b))
            if e in directed:
                raise OpenSurface(f"boundary edge {e} used twice with the same orientation")
            directed.add(e)
    for a, b in directed:
        if (b, a) not in directed:
            raise OpenSurface(f"boundary edge {(a, b)} has a single incident face")
    return SurfaceMesh(
        faces=tuple(loops),
        vertex_positions=mesh.vertices[:M],
        bulk_face_ids=mesh.boundary_faces.copy(),
    )


def restrict_to_surface(values, M):
    """Surface dofs of a bulk vector (the transpose of the reduction matrix)."""
    return np.asarray(values)[:M]


def prolong_from_surface(values, N):
    """Zero-padded bulk vector from surface dofs (the reduction matrix itself)."""
    values = np.asarray(values)
    out = np.zeros((N,) + values.shape[1:], dtype=values.dtype)
    out[: len(values)] = values
    return out


def boundary_first_permutation(num_nodes, faces: Sequence[np.ndarray], boundary_faces) -> np.ndarray:
    """``perm[new] = old`` placing boundary vertices first, stable within each group."""
    on_boundary = np.zeros(num_nodes, dtype=bool)
    for f in boundary_faces:
        on_boundary[faces[f]] = True
    idx = np.arange(num_nodes)
    return np.concatenate([idx[on_boundary], idx[~on_boundary]])


def reorder_boundary_first(mesh: PolyMesh) -> Tuple[PolyMesh, np.ndarray]:
    """Relabel vertices boundary-first; returns the new mesh and ``perm[new] = old``."""
    perm = boundary_first_permutation(mesh.num_nodes, mesh.faces, mesh.boundary_faces)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    M = len(np.unique(np.concatenate([mesh.faces[f] for f in mesh.boundary_faces])))
    new = PolyMesh(
        vertices=mesh.vertices[perm],
        faces=tuple(inv[f] for f in mesh.faces),
        cells=mesh.cells,
        boundary_faces=mesh.boundary_faces,
        num_boundary_nodes=M,
        cube_side=mesh.cube_side,
        h_nominal=mesh.h_nominal,
        cube_cells=mesh.cube_cells,
    )
    return new, perm


# -- JSON load/store --------------------------------------------------------------


def _encode_signed(f, s):
    return int(f) if s > 0 else ~int(f)


def save_mesh(mesh: PolyMesh, path) -> None:
    """Write the mesh as JSON; negative face references are stored as ``~face``."""
    verts = ",\n    ".join(
        "[" + ",".join(f"{x:.17g}" for x in row) + "]" for row in mesh.vertices
    )
    doc = {
        "faces": [f.tolist() for f in mesh.faces],
        "cells": [[_encode_signed(f, s) for f, s in zip(fids, signs)] for fids, signs in mesh.cells],
        "num_boundary_nodes": int(mesh.num_boundary_nodes),
        "boundary_faces": mesh.boundary_faces.tolist(),
        "cube_side": None if mesh.cube_side is None else float(mesh.cube_side),
        "h_nominal": None if mesh.h_nominal is None else float(mesh.h_nominal),
    }
    body = json.dumps(doc)
    text = '{"vertices": [\n    ' + verts + "\n  ],\n " + body[1:]
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_mesh(path) -> PolyMesh:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read mesh {path}: {exc}") from exc
    try:
        cells = []
        for refs in doc["cells"]:
            refs = np.asarray(refs, dtype=np.int64)
            signs = np.where(refs >= 0, 1.0, -1.0)
            cells.append((np.where(refs >= 0, refs, ~refs), signs))
        mesh = PolyMesh(
            vertices=np.asarray(doc["vertices"], dtype=float).reshape(-1, 3),
            faces=tuple(doc["faces"]),
            cells=tuple(cells),
            boundary_faces=doc["boundary_faces"],
            num_boundary_nodes=int(doc["num_boundary_nodes"]),
            cube_side=doc.get("cube_side"),
            h_nominal=doc.get("h_nominal"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IoFailure(f"malformed mesh file {path}: {exc}") from exc
    return mesh
