"""Input validation helpers shared by the estimator, the harness and the CLI."""

import numpy as np

from .exceptions import DimensionMismatch, ValidationError
from .mesh import PolyMesh

__all__ = ["check_coupling", "check_levels", "check_mesh", "check_nodal", "check_tolerance"]


def check_coupling(alpha, beta):
    """Return ``(alpha, beta)`` as floats; needs ``alpha > 0`` and ``beta >= 0``."""
    try:
        alpha, beta = float(alpha), float(beta)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"coupling coefficients must be numbers: {exc}") from exc
    if not np.isfinite(alpha) or not np.isfinite(beta) or alpha <= 0 or beta < 0:
        raise ValidationError(f"need alpha > 0 and beta >= 0, got alpha={alpha}, beta={beta}")
    return alpha, beta


def check_tolerance(tol):
    tol = float(tol)
    if not 0.0 < tol < 1.0:
        raise ValidationError(f"tolerance must lie in (0, 1), got {tol}")
    return tol


def check_levels(levels):
    """Grid resolutions as a list of ints, ascending, at least two, each >= 2."""
    try:
        out = [int(n) for n in levels]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"levels must be integers: {exc}") from exc
    if len(out) < 2:
        raise ValidationError("need at least two levels")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValidationError(f"levels must be strictly ascending, got {out}")
    if out[0] < 2:
        raise ValidationError("every level must be >= 2")
    return out


def check_mesh(mesh):
    if not isinstance(mesh, PolyMesh):
        raise ValidationError(f"expected a PolyMesh, got {type(mesh).__name__}")
    if mesh.num_boundary_nodes <= 0 or len(mesh.boundary_faces) == 0:
        raise ValidationError("mesh has no boundary")
    for f in mesh.boundary_faces:
        if mesh.faces[f].max() >= mesh.num_boundary_nodes:
            raise ValidationError("mesh is not in boundary-first node order")
    return mesh


def check_nodal(values, points, name="field"):
    """Nodal values from a callable or an array, checked against ``points``."""
    points = np.asarray(points, dtype=float)
    if callable(values):
        values = values(points)
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(len(points), float(arr))
    if arr.shape != (len(points),):
        raise DimensionMismatch(f"{name}: expected {len(points)} nodal values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: nodal values must be finite")
    return arr
