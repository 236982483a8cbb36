"""Manufactured bulk-surface problems."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import LevelSetDomain, box, sphere

__all__ = ["ManufacturedProblem", "sphere_problem", "constant_problem", "robin_residual"]

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact bulk/surface solutions with matching data for
    ``-lap u + u = f`` in the bulk, ``-lap_G v + v + du/dn = g`` on the surface
    and ``du/dn = -alpha u + beta v`` on the surface.

    All callables take points of shape ``(k, 3)``.
    """

    u: Field
    v: Field
    f: Field
    g: Field
    grad_u: Field
    alpha: float
    beta: float
    domain: LevelSetDomain
    name: str = "custom"


def _xyz(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def sphere_problem() -> ManufacturedProblem:
    """Unit-sphere benchmark with ``u = xyz - xy`` and ``v = 2xyz - 3/2 xy`` (alpha=1, beta=2)."""

    def u(p):
        x, y, z = _xyz(p)
        return x * y * z - x * y

    def v(p):
        x, y, z = _xyz(p)
        return 2.0 * x * y * z - 1.5 * x * y

    def f(p):
        x, y, z = _xyz(p)
        return x * y * z - x * y

    def g(p):
        x, y, z = _xyz(p)
        return 29.0 * x * y * z - 12.5 * x * y

    def grad_u(p):
        x, y, z = _xyz(p)
        return np.stack([y * z - y, x * z - x, x * y], axis=-1)

    return ManufacturedProblem(u, v, f, g, grad_u, 1.0, 2.0, sphere(), name="sphere")


def constant_problem(value=1.0, alpha=1.0, beta=2.0, domain=None) -> ManufacturedProblem:
    """Constant pair ``u = c``, ``v = alpha c / beta``: the polynomial pair
    compatible with the Robin coupling on any closed surface."""
    if domain is None:
        domain = box()
    c = float(value)
    cv = alpha * c / beta if beta > 0 else 0.0

    def const(k):
        return lambda p: np.full(np.shape(p)[:-1], k, dtype=float)

    def zero_grad(p):
        return np.zeros(np.shape(p), dtype=float)

    return ManufacturedProblem(const(c), const(cv), const(c), const(cv), zero_grad, alpha, beta, domain, name="constant")


def robin_residual(problem: ManufacturedProblem, points, normals):
    """``du/dn + alpha u - beta v`` at surface points with given unit normals."""
    dudn = np.einsum("ij,ij->i", problem.grad_u(points), normals)
    return dudn + problem.alpha * problem.u(points) - problem.beta * problem.v(points)
