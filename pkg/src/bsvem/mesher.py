"""Cartesian cut-and-extrude mesh generation for level-set domains.

1. The cubic bounding box is split into ``n**3`` equal cubes.
2. A cube is kept when none of its corners lies outside the domain and its
   centre lies strictly inside.
3. Every face of a kept cube whose neighbour was discarded (or lies outside
   the grid) is extruded: its corners are projected onto the boundary, and
   the face, its projected copy and the lateral faces bound a new cell.

Faces lying exactly on the boundary are kept as boundary faces without
extrusion. Non-planar quadrilaterals are split along their shorter diagonal.
"""

import logging
from collections import Counter

import numpy as np

from .domain import LevelSetDomain, closest_point_project
from .exceptions import BSVEMError, DegenerateElement, NoInteriorCube, ValidationError
from .geometry import cell_geometry, planarity_defect, PLANARITY_RTOL
from .mesh import PolyMesh, reorder_boundary_first
from .vem_cell import CUBE_FACES

logger = logging.getLogger(__name__)

__all__ = ["generate_cut_extrude"]

INSIDE_EPS = 1e-12
ON_SURFACE_TOL = 1e-12

# neighbour offset for each entry of CUBE_FACES
_FACE_OFFSETS = ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1))


class _Builder:
    def __init__(self):
        self.points = []
        self.faces = []
        self.face_index = {}

    def add_point(self, p):
        self.points.append(np.asarray(p, dtype=float))
        return len(self.points) - 1

    def add_face(self, loop):
        """Return ``(face_id, sign)`` of a loop, creating the face if new."""
        key = tuple(sorted(loop))
        f = self.face_index.get(key)
        if f is None:
            f = len(self.faces)
            self.faces.append(tuple(loop))
            self.face_index[key] = f
            return f, 1.0
        return f, (1.0 if _same_cycle(self.faces[f], loop) else -1.0)

    def add_polygon(self, loop):
        """Add a possibly degenerate or non-planar loop; returns a list of ``(face, sign)``."""
        loop = _dedupe(loop)
        if len(loop) < 3:
            return []
        pts = np.array([self.points[v] for v in loop])
        if len(loop) == 3 or planarity_defect(pts) <= PLANARITY_RTOL:
            return [self.add_face(loop)]
        # non-planar quadrilateral: split along the shorter diagonal
        a, b, c, d = loop
        d02 = np.linalg.norm(pts[0] - pts[2])
        d13 = np.linalg.norm(pts[1] - pts[3])
        use02 = d02 < d13 or (d02 == d13 and min(a, c) < min(b, d))
        tris = [(a, b, c), (a, c, d)] if use02 else [(a, b, d), (b, c, d)]
        return [self.add_face(t) for t in tris]


def _dedupe(loop):
    out = []
    for v in loop:
        if not out or out[-1] != v:
            out.append(v)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def _same_cycle(stored, loop):
    k = stored.index(loop[0])
    n = len(stored)
    return all(stored[(k + i) % n] == loop[i] for i in range(n))


def generate_cut_extrude(domain: LevelSetDomain, n: int) -> PolyMesh:
    """Polyhedral mesh of ``domain`` from an ``n``-per-axis Cartesian grid.

    Raises
    ------
    NoInteriorCube
        If no grid cube lies inside the domain.
    ProjectionFailure
        If a corner cannot be projected onto the boundary.
    DegenerateElement
        If the kept region is non-manifold or an extruded cell is invalid.
    """
    if int(n) != n or n < 2:
        raise ValidationError("n must be an integer >= 2")
    n = int(n)
    L = domain.bbox_edge
    side = L / n
    lo = np.asarray(domain.lower, dtype=float)
    ticks = [lo[k] + side * np.arange(n + 1) for k in range(3)]
    G = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1)
    dval = domain.d(G)
    centers = G[:-1, :-1, :-1] + 0.5 * side
    dc = domain.d(centers)

    eps_v = INSIDE_EPS * L
    corner_ok = dval <= eps_v
    keep = dc < -INSIDE_EPS * L
    for bx in (0, 1):
        for by in (0, 1):
            for bz in (0, 1):
                keep &= corner_ok[bx : n + bx, by : n + by, bz : n + bz]
    if not keep.any():
        raise NoInteriorCube(f"no grid cube lies inside the domain for n={n}")
    on_surface = np.abs(dval) <= ON_SURFACE_TOL * L

    b = _Builder()
    grid_node = {}

    def node(ijk):
        v = grid_node.get(ijk)
        if v is None:
            v = b.add_point(G[ijk])
            grid_node[ijk] = v
        return v

    cells, cube_flags = [], []
    outer = []  # (loop of grid indices, loop of node ids)
    boundary_direct = []
    kept = np.argwhere(keep)
    for i, j, k in kept:
        corners = [(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)) for c in range(8)]
        ids = [node(c) for c in corners]
        fids, signs = [], []
        for loop, off in zip(CUBE_FACES, _FACE_OFFSETS):
            f, s = b.add_face([ids[c] for c in loop])
            fids.append(f)
            signs.append(s)
            nb = (i + off[0], j + off[1], k + off[2])
            inside = all(0 <= nb[a] < n for a in range(3)) and keep[nb]
            if not inside:
                gloop = [corners[c] for c in loop]
                if all(on_surface[g] for g in gloop):
                    boundary_direct.append(f)
                else:
                    outer.append((gloop, [ids[c] for c in loop]))
        cells.append((fids, signs))
        cube_flags.append(True)

    _check_manifold(outer, boundary_direct, b.faces)

    projected = {}

    def proj(g, v):
        if on_surface[g]:
            return v
        p = projected.get(g)
        if p is None:
            p = b.add_point(closest_point_project(G[g], domain))
            projected[g] = p
        return p

    boundary = list(boundary_direct)
    for gloop, loop in outer:
        ploop = [proj(g, v) for g, v in zip(gloop, loop)]
        fids, signs = [], []
        f, s = b.add_face(loop[::-1])
        fids.append(f)
        signs.append(s)
        m = len(loop)
        for t in range(m):
            a, c = loop[t], loop[(t + 1) % m]
            pa, pc = ploop[t], ploop[(t + 1) % m]
            for f, s in b.add_polygon([a, c, pc, pa]):
                fids.append(f)
                signs.append(s)
        for f, s in b.add_polygon(ploop):
            fids.append(f)
            signs.append(s)
            boundary.append(f)
        cells.append((fids, signs))
        cube_flags.append(False)

    vertices = np.array(b.points)
    faces = [np.array(f) for f in b.faces]
    for c, (fids, signs) in enumerate(cells):
        if cube_flags[c]:
            continue
        _validate_cell(vertices, faces, fids, signs, c)

    mesh = PolyMesh(
        vertices=vertices,
        faces=tuple(faces),
        cells=tuple(cells),
        boundary_faces=np.array(boundary, dtype=np.int64),
        num_boundary_nodes=0,
        cube_side=side,
        h_nominal=side * np.sqrt(3.0),
        cube_cells=np.array(cube_flags),
    )
    mesh, _ = reorder_boundary_first(mesh)
    logger.info(
        "cut-extrude n=%d: %d nodes (%d on boundary), %d cells (%d extruded)",
        n,
        mesh.num_nodes,
        mesh.num_boundary_nodes,
        mesh.num_cells,
        mesh.num_exterior_cells,
    )
    return mesh


def _check_manifold(outer, boundary_direct, faces):
    count = Counter()
    loops = [loop for _, loop in outer] + [list(faces[f]) for f in boundary_direct]
    for loop in loops:
        m = len(loop)
        for t in range(m):
            count[frozenset((loop[t], loop[(t + 1) % m]))] += 1
    bad = [tuple(e) for e, c in count.items() if c != 2]
    if bad:
        raise DegenerateElement(
            f"kept cubes form a non-manifold region ({len(bad)} edges, e.g. {bad[0]}); "
            "refine the grid or use a convex domain"
        )


def _validate_cell(vertices, faces, fids, signs, c):
    ids = {}
    loops = []
    for f, s in zip(fids, signs):
        loop = [ids.setdefault(v, len(ids)) for v in faces[f]]
        loops.append(loop if s > 0 else loop[::-1])
    pts = vertices[list(ids)]
    try:
        cell_geometry(pts, loops)
    except BSVEMError as exc:
        raise DegenerateElement(f"extruded cell {c} is invalid: {exc}") from exc
