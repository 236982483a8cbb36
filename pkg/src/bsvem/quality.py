"""Mesh regularity diagnostics (shape-regularity ratios, boundary-node placement)."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from .domain import LevelSetDomain
from .geometry import cell_geometry, face_geometry
from .mesh import PolyMesh

__all__ = ["QualityReport", "check_regularity", "face_ratios", "cell_ratios"]


@dataclass
class QualityReport:
    gamma1_observed: float
    gamma2_observed: float
    h_max: float
    h_reported: Optional[float]
    violations: List[Tuple[str, int, str]] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def face_ratios(points):
    """``(gamma1, gamma2, diameter)`` of a planar polygon.

    ``gamma1`` is the smallest distance from the centroid to an edge line over
    the diameter; it is non-positive when the centroid does not see every edge.
    """
    frame, _, local = face_geometry(points, check=False)
    nxt = np.roll(local, -1, axis=0)
    edge = nxt - local
    length = np.linalg.norm(edge, axis=1)
    # signed distance of the origin (centroid) to each edge line, positive inside
    dist = (edge[:, 0] * local[:, 1] - edge[:, 1] * local[:, 0]) / length
    dist = -dist
    h = frame.diameter
    return float(dist.min() / h), float(pdist(local).min() / h), h


def cell_ratios(vertices, loops):
    """``(gamma1, gamma2, diameter)`` of a polyhedron with outward face loops."""
    geom = cell_geometry(vertices, loops, check=False)
    dmin = np.inf
    for loop in loops:
        p = vertices[np.asarray(loop)]
        a = 0.5 * np.cross(p - p[0], np.roll(p, -1, axis=0) - p[0]).sum(axis=0)
        nrm = a / np.linalg.norm(a)
        dmin = min(dmin, float((p.mean(axis=0) - geom.centroid) @ nrm))
    h = geom.diameter
    return dmin / h, float(pdist(vertices).min() / h), h


def check_regularity(mesh: PolyMesh, domain: Optional[LevelSetDomain] = None, surface_tol=1e-10) -> QualityReport:
    """Report shape-regularity ratios for every cell and face; never raises on poor quality.

    Identical cubes are evaluated once. When ``domain`` is given, boundary
    vertices are also checked to lie on its zero level set within ``surface_tol``.
    """
    violations = []
    g1 = g2 = np.inf
    h_max = 0.0
    cube_result = None
    for c in range(mesh.num_cells):
        if mesh.cube_cells[c] and cube_result is not None:
            r = cube_result
        else:
            nodes, loops = mesh.cell_loops(c)
            r = cell_ratios(mesh.vertices[nodes], loops)
            if mesh.cube_cells[c]:
                cube_result = r
        if r[0] <= 0:
            violations.append(("cell", c, "star_shaped"))
        g1, g2, h_max = min(g1, r[0]), min(g2, r[1]), max(h_max, r[2])

    square_result = None
    cube_faces = set()
    for c in np.flatnonzero(mesh.cube_cells):
        cube_faces.update(mesh.cells[c][0].tolist())
    for f, loop in enumerate(mesh.faces):
        if f in cube_faces and square_result is not None:
            r = square_result
        else:
            r = face_ratios(mesh.vertices[loop])
            if f in cube_faces:
                square_result = r
        if r[0] <= 0:
            violations.append(("face", f, "star_shaped"))
        g1, g2 = min(g1, r[0]), min(g2, r[1])

    if domain is not None:
        dist = np.abs(domain.d(mesh.vertices[: mesh.num_boundary_nodes]))
        for v in np.flatnonzero(dist > surface_tol):
            violations.append(("vertex", int(v), "boundary_node_off_surface"))

    return QualityReport(
        gamma1_observed=float(g1),
        gamma2_observed=float(g2),
        h_max=float(h_max),
        h_reported=mesh.h_nominal,
        violations=violations,
    )
