"""Geometric primitives for planar polygons in 3D and for polyhedra.

All polynomial moments use scaled monomials ``((x - x_c) / h)**alpha`` with
``x_c`` the centroid and ``h`` the diameter of the entity. Moments up to
degree two are computed exactly from a signed simplex decomposition.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .exceptions import (
    NegativeVolume,
    NonPlanarFace,
    OpenCell,
    SelfIntersectingFace,
    ValidationError,
)

__all__ = [
    "FaceFrame",
    "MomentSet",
    "CellGeometry",
    "face_geometry",
    "cell_geometry",
    "diameter",
    "planarity_defect",
]

PLANARITY_RTOL = 1e-9


@dataclass(frozen=True)
class FaceFrame:
    """Local orthonormal frame attached to a planar face."""

    origin: np.ndarray  # face centroid, (3,)
    basis: np.ndarray  # (2, 3) in-plane orthonormal vectors
    normal: np.ndarray  # (3,), equals cross(basis[0], basis[1])
    area: float
    diameter: float

    def to_local(self, points):
        return (np.asarray(points, dtype=float) - self.origin) @ self.basis.T

    def to_global(self, coords):
        return self.origin + np.asarray(coords, dtype=float) @ self.basis


@dataclass(frozen=True)
class MomentSet:
    """Integrals of the scaled monomials of degree <= 2 over an entity.

    ``first[k]`` is the integral of ``X_k`` and ``second[k, l]`` the integral of
    ``X_k X_l``, where ``X = (x - centroid) / diameter``.
    """

    measure: float
    centroid: np.ndarray
    diameter: float
    first: np.ndarray
    second: np.ndarray

    @property
    def dim(self):
        return self.first.shape[0]

    def monomial_mass(self):
        """Gram matrix ``H_ij = int m_i m_j`` of the basis ``1, X_1, ..., X_d``."""
        d = self.dim
        H = np.empty((d + 1, d + 1))
        H[0, 0] = self.measure
        H[0, 1:] = H[1:, 0] = self.first
        H[1:, 1:] = self.second
        return H

    def values(self):
        """Flat list ordered ``1, X_k, X_k X_l (k <= l)``."""
        iu = np.triu_indices(self.dim)
        return np.concatenate([[self.measure], self.first, self.second[iu]])


@dataclass(frozen=True)
class CellGeometry:
    volume: float
    centroid: np.ndarray
    diameter: float
    moments: MomentSet
    boundary_area: float


def diameter(points):
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


def _cross(a, b):
    # np.cross carries heavy per-call overhead for small arrays
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def _next(points):
    return np.concatenate([points[1:], points[:1]])


def _newell(points):
    # area vector of a closed loop (magnitude = area, direction = right-hand normal)
    return 0.5 * _cross(points, _next(points)).sum(axis=0)


def planarity_defect(points):
    """Max distance of the vertices to the Newell plane, relative to the diameter."""
    points = np.asarray(points, dtype=float)
    ref = points.mean(axis=0)
    a = _newell(points - ref)
    na = np.linalg.norm(a)
    h = diameter(points)
    if na == 0.0 or h == 0.0:
        return np.inf
    dist = np.abs((points - ref) @ (a / na))
    return float(dist.max() / h)


def _segments_cross(p, q, r, s):
    # proper intersection of 2D segments pq and rs
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return d1 * d2 < 0 and d3 * d4 < 0


def _triangle_moments(tri):
    """Signed area, first and second raw moments of 2D triangles ``(t, 3, 2)``."""
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    s = tri.sum(axis=1)
    first = area[:, None] * s / 3.0
    second = area[:, None, None] / 12.0 * (
        np.einsum("tvk,tvl->tkl", tri, tri) + np.einsum("tk,tl->tkl", s, s)
    )
    return area, first, second


def _tet_moments(tet):
    """Signed volume, first and second raw moments of tetrahedra ``(t, 4, 3)``."""
    e = tet[:, 1:] - tet[:, :1]
    vol = np.linalg.det(e) / 6.0
    s = tet.sum(axis=1)
    first = vol[:, None] * s / 4.0
    second = vol[:, None, None] / 20.0 * (
        np.einsum("tvk,tvl->tkl", tet, tet) + np.einsum("tk,tl->tkl", s, s)
    )
    return vol, first, second


def face_geometry(points, check=True):
    """Frame, degree-2 moments and local coordinates of a planar polygon.

    Parameters
    ----------
    points : array_like, shape (n, 3)
        Vertex loop; its orientation fixes the normal by the right-hand rule.
    check : bool
        Validate planarity and, for quadrilaterals, simplicity.

    Returns
    -------
    frame : FaceFrame
    moments : MomentSet
        Moments in frame coordinates (2D), centred at the centroid.
    local : ndarray, shape (n, 2)
        Vertex coordinates in the frame.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 3:
        raise ValidationError("a face needs at least 3 vertices")
    ref = points.mean(axis=0)
    rel = points - ref
    a = _newell(rel)
    na = np.linalg.norm(a)
    h = diameter(points)
    if na <= 1e-300 or h == 0.0:
        raise NonPlanarFace("face has zero area")
    normal = a / na
    if check:
        defect = float(np.abs(rel @ normal).max() / h)
        if defect > PLANARITY_RTOL:
            raise NonPlanarFace(f"face planarity defect {defect:.3e} exceeds tolerance")

    # first in-plane axis along the longest vertex offset from the mean
    k = int(np.argmax(np.einsum("ij,ij->i", rel, rel)))
    e1 = rel[k] - (rel[k] @ normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = _cross(normal, e1)
    basis = np.vstack([e1, e2])
    xy = rel @ basis.T

    if check and n == 4:
        if _segments_cross(xy[0], xy[1], xy[2], xy[3]) or _segments_cross(xy[1], xy[2], xy[3], xy[0]):
            raise SelfIntersectingFace("quadrilateral face is self-intersecting")

    x, y = xy[:, 0], xy[:, 1]
    xn, yn = _next(x), _next(y)
    cr = x * yn - xn * y
    area = 0.5 * cr.sum()
    if area <= 0.0:
        raise SelfIntersectingFace("face loop has non-positive area in its own frame")
    c2 = np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * area)
    local = xy - c2
    origin = ref + c2 @ basis

    scaled = local / h
    tri = np.zeros((n, 3, 2))
    tri[:, 1] = scaled
    tri[:, 2] = _next(scaled)
    ar, fi, se = _triangle_moments(tri)
    # the raw moments come from coordinates scaled by 1/h; the measures are in physical units
    scale = h * h
    moments = MomentSet(
        measure=float(area),
        centroid=np.zeros(2),
        diameter=h,
        first=fi.sum(axis=0) * scale,
        second=se.sum(axis=0) * scale,
    )
    frame = FaceFrame(origin=origin, basis=basis, normal=normal, area=float(area), diameter=h)
    return frame, moments, local


def _check_closed(face_loops):
    directed = {}
    for f, loop in enumerate(face_loops):
        m = len(loop)
        for i in range(m):
            e = (int(loop[i]), int(loop[(i + 1) % m]))
            if e in directed:
                raise OpenCell(f"directed edge {e} appears twice (inconsistent orientation)")
            directed[e] = f
    for a, b in directed:
        if (b, a) not in directed:
            raise OpenCell(f"edge {(a, b)} is not shared by two faces")


def cell_geometry(vertices, face_loops: Sequence[Sequence[int]], check=True) -> CellGeometry:
    """Volume, centroid, diameter and degree-2 moments of a polyhedron.

    ``face_loops`` index into ``vertices`` and must be oriented with outward
    normals. The volume comes from the divergence theorem over the faces; the
    moments from the signed tetrahedra joining the cell's vertex mean to a fan
    triangulation of every face.
    """
    vertices = np.asarray(vertices, dtype=float)
    if check:
        if len(face_loops) < 4:
            raise OpenCell("a polyhedron needs at least 4 faces")
        _check_closed(face_loops)

    ref = vertices.mean(axis=0)
    rel = vertices - ref
    h = diameter(vertices)

    tets = []
    volume = 0.0
    boundary_area = 0.0
    for loop in face_loops:
        p = rel[np.asarray(loop)]
        a = _newell(p)
        fc = p.mean(axis=0)
        volume += float(fc @ a) / 3.0
        boundary_area += float(np.linalg.norm(a))
        nxt = _next(p)
        t = np.empty((len(p), 4, 3))
        t[:, 0] = 0.0
        t[:, 1] = fc
        t[:, 2] = p
        t[:, 3] = nxt
        tets.append(t)
    if volume <= 0.0:
        raise NegativeVolume(f"cell volume {volume:.3e} is not positive; check face orientation")

    tets = np.concatenate(tets) / h
    vol, fi, se = _tet_moments(tets)
    s3 = h**3
    sub_volume = vol.sum() * s3
    first_ref = fi.sum(axis=0) * s3  # int (x - ref)/h
    second_ref = se.sum(axis=0) * s3  # int (x - ref)(x - ref)^T / h^2
    shift = first_ref / sub_volume  # (centroid - ref) / h
    centroid = ref + shift * h
    second = second_ref - sub_volume * np.outer(shift, shift)

    moments = MomentSet(
        measure=volume,
        centroid=centroid,
        diameter=h,
        first=first_ref - sub_volume * shift,
        second=second,
    )
    return CellGeometry(
        volume=volume,
        centroid=centroid,
        diameter=h,
        moments=moments,
        boundary_area=boundary_area,
    )
