"""Collapsed (conical product) Gauss rules on simplices and tensor rules on boxes."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def _jacobi01(n, alpha):
    # Gauss-Jacobi for weight (1 - t)**alpha on [0, 1]
    if alpha == 0:
        x, w = roots_legendre(n)
    else:
        x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Reference rule on the triangle (0,0), (1,0), (0,1).

    Returns barycentric coordinates ``(q, 3)`` and weights summing to 1/2.
    Exact for polynomials of total degree ``degree``.
    """
    n = degree // 2 + 1
    u, wu = _jacobi01(n, 1)
    v, wv = _jacobi01(n, 0)
    U, V = np.meshgrid(u, v, indexing="ij")
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    w = np.outer(wu, wv).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


@lru_cache(maxsize=None)
def tetrahedron_rule(degree):
    """Reference rule on the unit tetrahedron; weights sum to 1/6."""
    n = degree // 2 + 1
    u, wu = _jacobi01(n, 2)
    v, wv = _jacobi01(n, 1)
    s, ws = _jacobi01(n, 0)
    U, V, S = np.meshgrid(u, v, s, indexing="ij")
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    z = ((1.0 - U) * (1.0 - V) * S).ravel()
    w = np.einsum("i,j,k->ijk", wu, wv, ws).ravel()
    bary = np.column_stack([1.0 - x - y - z, x, y, z])
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


def simplex_points(vertices, degree):
    """Quadrature points and weights on a batch of simplices.

    ``vertices`` has shape ``(s, k+1, dim)`` for triangles (k=2) or
    tetrahedra (k=3). Weights carry the signed simplex measure, so sums over
    a signed decomposition of a region integrate exactly over that region.

    Returns ``points (s, q, dim)`` and ``weights (s, q)``.
    """
    vertices = np.asarray(vertices, dtype=float)
    k = vertices.shape[1] - 1
    if k == 2:
        bary, w = triangle_rule(degree)
        e1 = vertices[:, 1] - vertices[:, 0]
        e2 = vertices[:, 2] - vertices[:, 0]
        if vertices.shape[2] == 2:
            jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        else:
            jac = np.linalg.norm(np.cross(e1, e2), axis=-1)
    elif k == 3:
        bary, w = tetrahedron_rule(degree)
        e = vertices[:, 1:] - vertices[:, :1]
        jac = np.linalg.det(e)
    else:
        raise ValueError("only triangles and tetrahedra are supported")
    points = np.einsum("qv,svd->sqd", bary, vertices)
    return points, jac[:, None] * w[None, :]


def box_rule(lower, upper, n):
    """Tensor Gauss-Legendre rule with ``n`` points per axis on a box."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x, w = roots_legendre(n)
    grids = []
    weights = np.ones(1)
    for lo, hi in zip(lower, upper):
        grids.append(lo + 0.5 * (x + 1.0) * (hi - lo))
        weights = np.multiply.outer(weights, 0.5 * (hi - lo) * w).ravel()
    mesh = np.meshgrid(*grids, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    return points, weights
