"""Level-set domains and the closest-point (normal) projection onto their boundary."""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .exceptions import ProjectionFailure, ValidationError

__all__ = [
    "LevelSetDomain",
    "sphere",
    "ellipsoid",
    "box",
    "closest_point_project",
]


@dataclass(frozen=True)
class LevelSetDomain:
    """A domain ``{x : d(x) < 0}`` together with a bounding box.

    ``d`` and ``grad`` take an array of shape ``(..., 3)`` and return arrays of
    shape ``(...)`` and ``(..., 3)`` respectively. ``d`` need not be a signed
    distance, only negative inside with a non-vanishing gradient near the
    boundary.
    """

    d: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    lower: Tuple[float, float, float]
    upper: Tuple[float, float, float]
    name: str = "custom"

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise ValidationError("bounding box must satisfy lower < upper in 3D")

    @property
    def bbox_center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    @property
    def bbox_edge(self) -> float:
        """Edge length of the (cubic) bounding box."""
        extent = np.asarray(self.upper, dtype=float) - np.asarray(self.lower, dtype=float)
        if not np.allclose(extent, extent[0], rtol=1e-14, atol=0.0):
            raise ValidationError("cut-and-extrude meshing requires a cubic bounding box")
        return float(extent[0])


def sphere(radius=1.0, center=(0.0, 0.0, 0.0)) -> LevelSetDomain:
    """Ball of the given radius; ``d`` is the exact signed distance.

    The bounding box is the tight cube ``center ± radius``.
    """
    c = np.asarray(center, dtype=float)
    r = float(radius)

    def d(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - c, axis=-1) - r

    def grad(x):
        y = np.asarray(x, dtype=float) - c
        nrm = np.linalg.norm(y, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return y / nrm

    return LevelSetDomain(d, grad, tuple(c - r), tuple(c + r), name="sphere")


def ellipsoid(semi_axes=(2.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> LevelSetDomain:
    """Ellipsoid ``sum(((x - c)/a)**2) < 1`` (level set, not a distance)."""
    a = np.asarray(semi_axes, dtype=float)
    c = np.asarray(center, dtype=float)
    half = float(a.max())

    def d(x):
        y = (np.asarray(x, dtype=float) - c) / a
        return np.sum(y * y, axis=-1) - 1.0

    def grad(x):
        return 2.0 * (np.asarray(x, dtype=float) - c) / a**2

    return LevelSetDomain(d, grad, tuple(c - half), tuple(c + half), name="ellipsoid")


def box(half_width=1.0, center=(0.0, 0.0, 0.0)) -> LevelSetDomain:
    """Axis-aligned cube; with its own bounding box the grid is boundary-aligned."""
    c = np.asarray(center, dtype=float)
    w = float(half_width)

    def d(x):
        return np.max(np.abs(np.asarray(x, dtype=float) - c), axis=-1) - w

    def grad(x):
        y = np.asarray(x, dtype=float) - c
        k = np.argmax(np.abs(y), axis=-1)
        g = np.zeros_like(y)
        np.put_along_axis(g, k[..., None], np.sign(np.take_along_axis(y, k[..., None], -1)), -1)
        return g

    return LevelSetDomain(d, grad, tuple(c - w), tuple(c + w), name="box")


def closest_point_project(x, domain: LevelSetDomain, tol=1e-12, max_iter=50) -> np.ndarray:
    """Return the point of the zero level set closest to ``x``.

    Damped Newton iteration on the optimality system ``p - x + lam grad d(p) = 0``,
    ``d(p) = 0``, started from a level-set Newton projection of ``x``. The
    Hessian of ``d`` is approximated by central differences of the gradient;
    it only enters the Jacobian, so the converged point is unaffected.

    Raises
    ------
    ProjectionFailure
        If the iteration has not converged after ``max_iter`` steps.
    """
    x = np.asarray(x, dtype=float)
    d, grad = domain.d, domain.grad

    g = grad(x)
    gg = float(g @ g)
    if not np.isfinite(gg) or gg == 0.0:
        raise ProjectionFailure(f"vanishing level-set gradient at {x}")
    p = x - d(x) * g / gg
    for _ in range(8):
        g = grad(p)
        val = float(d(p))
        if abs(val) <= tol:
            break
        p = p - val * g / float(g @ g)
    lam = float((x - p) @ g / (g @ g))

    def residual(p, lam):
        return np.concatenate([p - x + lam * grad(p), [float(d(p))]])

    def converged(p):
        n = grad(p)
        n = n / np.linalg.norm(n)
        r = x - p
        t = r - (r @ n) * n
        return abs(float(d(p))) <= tol and np.linalg.norm(t) <= 1e-12 * max(float(np.linalg.norm(r)), 1.0)

    eps = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    shifts = np.vstack([np.eye(3), -np.eye(3)]) * eps
    F = residual(p, lam)
    for _ in range(max_iter):
        if converged(p):
            return p
        gp = grad(p)
        gs = grad(p + shifts)
        H = (gs[:3] - gs[3:]).T / (2 * eps)
        J = np.zeros((4, 4))
        J[:3, :3] = np.eye(3) + lam * 0.5 * (H + H.T)
        J[:3, 3] = gp
        J[3, :3] = gp
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise ProjectionFailure(f"singular projection system at x={x.tolist()}") from exc
        size = 1.0
        normF = np.linalg.norm(F)
        while True:
            p_new, lam_new = p + size * step[:3], lam + size * step[3]
            F_new = residual(p_new, lam_new)
            if np.linalg.norm(F_new) < normF or size < 1e-4:
                break
            size *= 0.5
        p, lam, F = p_new, lam_new, F_new
    if converged(p):
        return p
    raise ProjectionFailure(f"closest-point iteration did not converge for x={x.tolist()}")
