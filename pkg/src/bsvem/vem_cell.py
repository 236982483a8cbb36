"""Lowest-order virtual element operators on a polyhedron, plus the cube cache."""

import threading
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import MissingFaceOperators, SingularProjector
from .geometry import CellGeometry, cell_geometry
from .vem_face import FaceOperators, face_operators

__all__ = [
    "CellOperators",
    "CubeCache",
    "build_cell_operators",
    "cell_operators_from_points",
    "reference_cube",
    "cached_cube_operators",
    "BUILD_COUNTER",
]

COND_LIMIT = 1e12


class _Counter:
    """Counts generic local-matrix builds (instrumentation for the cube cache)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def increment(self):
        with self._lock:
            self.value += 1

    def reset(self):
        with self._lock:
            self.value = 0


BUILD_COUNTER = _Counter()


@dataclass(frozen=True)
class CellOperators:
    centroid: np.ndarray
    diameter: float
    volume: float
    proj_nabla_star: np.ndarray  # (4, n) coefficients of 1, X, Y, Z
    stiffness: np.ndarray
    mass: np.ndarray
    stiffness_consistency: np.ndarray
    mass_consistency: np.ndarray

    @property
    def n(self):
        return self.proj_nabla_star.shape[1]

    def evaluate(self, coeffs, points):
        X = (np.asarray(points, dtype=float) - self.centroid) / self.diameter
        basis = np.column_stack([np.ones(len(X)), X])
        return basis @ coeffs


def build_cell_operators(
    geom: CellGeometry,
    vertices,
    faces: Sequence[Tuple[np.ndarray, FaceOperators, float]],
) -> CellOperators:
    """Elliptic projector, stiffness and mass of a polyhedron.

    Parameters
    ----------
    geom : CellGeometry
    vertices : ndarray, shape (n, 3)
        Cell vertices; row order is the local dof order.
    faces : sequence of (local_ids, FaceOperators, sign)
        For every face, the local dof indices in the face's own loop order,
        its operators, and ``+1`` if the face normal points out of the cell,
        ``-1`` otherwise.
    """
    BUILD_COUNTER.increment()
    vertices = np.asarray(vertices, dtype=float)
    n = len(vertices)
    h = geom.diameter
    D = np.column_stack([np.ones(n), (vertices - geom.centroid) / h])

    B = np.zeros((4, n))
    total_area = 0.0
    for ids, fops, sign in faces:
        if fops is None:
            raise MissingFaceOperators("face operators missing for a cell face")
        w = fops.integral_functional
        normal = sign * fops.frame.normal
        # Green: int_E grad(phi).grad(m_j) = sum_F (grad(m_j).n_F) int_F phi
        np.add.at(B[0], ids, w)
        np.add.at(B[1:], (slice(None), ids), np.outer(normal / h, w))
        total_area += fops.frame.area
    B[0] /= total_area

    G = B @ D
    if np.linalg.cond(G) > COND_LIMIT:
        raise SingularProjector("cell projector matrix is numerically singular")
    pstar = np.linalg.solve(G, B)
    resid = np.eye(n) - D @ pstar
    stab = resid.T @ resid

    Gt = G.copy()
    Gt[0] = 0.0
    k_cons = pstar.T @ Gt @ pstar
    m_cons = pstar.T @ geom.moments.monomial_mass() @ pstar
    stiffness = k_cons + h * stab
    mass = m_cons + geom.volume * stab
    return CellOperators(
        centroid=geom.centroid,
        diameter=h,
        volume=geom.volume,
        proj_nabla_star=pstar,
        stiffness=0.5 * (stiffness + stiffness.T),
        mass=0.5 * (mass + mass.T),
        stiffness_consistency=k_cons,
        mass_consistency=m_cons,
    )


def cell_operators_from_points(vertices, face_loops, face_ops=None) -> CellOperators:
    """Build operators of a standalone polyhedron given outward face loops.

    Face operators are computed here unless supplied (one per loop, built on
    the loop as given, so every sign is ``+1``).
    """
    vertices = np.asarray(vertices, dtype=float)
    geom = cell_geometry(vertices, face_loops)
    faces = []
    for k, loop in enumerate(face_loops):
        loop = np.asarray(loop)
        fops = face_ops[k] if face_ops is not None else face_operators(vertices[loop])
        faces.append((loop, fops, 1.0))
    return build_cell_operators(geom, vertices, faces)


# corner c = bx + 2 by + 4 bz; loops counter-clockwise seen from outside
CUBE_FACES = (
    (0, 4, 6, 2),  # -x
    (1, 3, 7, 5),  # +x
    (0, 1, 5, 4),  # -y
    (2, 6, 7, 3),  # +y
    (0, 2, 3, 1),  # -z
    (4, 5, 7, 6),  # +z
)

CUBE_CORNERS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)], dtype=float)


def reference_cube(side):
    """Vertices ``(8, 3)`` and outward face loops of the cube ``[0, side]^3``."""
    return CUBE_CORNERS * float(side), [list(f) for f in CUBE_FACES]


class CubeCache:
    """Builds the local operators of an axis-aligned cube once per side length."""

    def __init__(self):
        self._store = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, side) -> CellOperators:
        key = float(side)
        with self._lock:
            ops = self._store.get(key)
            if ops is not None:
                self.hits += 1
                return ops
            vertices, loops = reference_cube(key)
            ops = cell_operators_from_points(vertices, loops)
            self._store[key] = ops
            self.misses += 1
            return ops

    def __len__(self):
        return len(self._store)


def cached_cube_operators(side, cache: CubeCache) -> CellOperators:
    """Operators of an axis-aligned cube in the canonical corner order."""
    if side <= 0:
        raise ValueError("cube side must be positive")
    return cache.get(side)
