"""Lowest-order virtual element operators on a planar polygon."""

from dataclasses import dataclass

import numpy as np

from .exceptions import SingularProjector
from .geometry import FaceFrame, MomentSet, face_geometry

__all__ = ["FaceOperators", "build_face_operators", "face_operators", "apply_face_projection"]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class FaceOperators:
    """Local matrices of one polygon, dofs ordered as the stored vertex loop.

    ``proj_nabla_star`` maps nodal values to the coefficients of the elliptic
    projection in the basis ``1, X, Y`` (scaled monomials of the face frame).
    """

    frame: FaceFrame
    proj_nabla_star: np.ndarray  # (3, n)
    proj_nabla_dof: np.ndarray  # (n, n)
    stiffness: np.ndarray
    mass: np.ndarray
    stiffness_consistency: np.ndarray
    mass_consistency: np.ndarray
    integral_functional: np.ndarray  # (n,)

    @property
    def n(self):
        return self.proj_nabla_star.shape[1]

    def evaluate(self, coeffs, points):
        """Evaluate projected polynomials with ``coeffs`` (3,) or (3, k) at 3D points."""
        X = self.frame.to_local(points) / self.frame.diameter
        basis = np.column_stack([np.ones(len(X)), X])
        return basis @ coeffs


def build_face_operators(frame: FaceFrame, moments: MomentSet, local) -> FaceOperators:
    """Assemble projector, stiffness and mass of a polygon from its geometry.

    ``local`` are the vertex coordinates in the frame (centroid at the origin),
    in counter-clockwise order.
    """
    local = np.asarray(local, dtype=float)
    n = len(local)
    h = frame.diameter
    area = frame.area

    D = np.column_stack([np.ones(n), local / h])

    nxt = np.concatenate([local[1:], local[:1]])
    edge = nxt - local  # edge i runs from vertex i to i+1
    length = np.linalg.norm(edge, axis=1)
    # outward edge normal scaled by length, for a counter-clockwise loop
    nl = np.column_stack([edge[:, 1], -edge[:, 0]])
    perimeter = length.sum()

    B = np.empty((3, n))
    # trapezoid rule on each edge, exact for the edgewise-linear traces
    B[0] = 0.5 * (length + np.concatenate([length[-1:], length[:-1]])) / perimeter
    B[1:] = 0.5 * (nl + np.concatenate([nl[-1:], nl[:-1]])).T / h

    G = B @ D
    if np.linalg.cond(G) > COND_LIMIT:
        raise SingularProjector("face projector matrix is numerically singular")
    pstar = np.linalg.solve(G, B)
    pdof = D @ pstar
    resid = np.eye(n) - pdof
    stab = resid.T @ resid

    Gt = G.copy()
    Gt[0] = 0.0
    k_cons = pstar.T @ Gt @ pstar
    H = moments.monomial_mass()
    m_cons = pstar.T @ H @ pstar

    stiffness = k_cons + h * stab
    mass = m_cons + area * stab
    integral = pstar.T @ H[0]
    return FaceOperators(
        frame=frame,
        proj_nabla_star=pstar,
        proj_nabla_dof=pdof,
        stiffness=0.5 * (stiffness + stiffness.T),
        mass=0.5 * (mass + mass.T),
        stiffness_consistency=k_cons,
        mass_consistency=m_cons,
        integral_functional=integral,
    )


def face_operators(points, check=True) -> FaceOperators:
    """Convenience wrapper: geometry and operators of a 3D vertex loop."""
    frame, moments, local = face_geometry(points, check=check)
    return build_face_operators(frame, moments, local)


def apply_face_projection(ops: FaceOperators, dofs):
    """Coefficients of the elliptic (= L2) projection of a nodal vector."""
    return ops.proj_nabla_star @ np.asarray(dofs, dtype=float)
