"""Estimator-style front end: configure with hyperparameters, ``fit`` on a mesh."""

import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .harness import compute_error
from .system import assemble_global, build_coupled_system, solve
from .validation import check_coupling, check_mesh, check_nodal, check_tolerance
from .vem_cell import CubeCache

logger = logging.getLogger(__name__)

__all__ = ["BulkSurfaceVEM"]


class BulkSurfaceVEM(BaseEstimator):
    """Lowest-order bulk-surface virtual element solver.

    Solves ``-lap u + u = f`` in the bulk and ``-lap_G v + v + du/dn = g`` on
    the surface, coupled through ``du/dn = -alpha u + beta v``.

    Parameters
    ----------
    alpha, beta : float
        Coupling coefficients, ``alpha > 0`` and ``beta >= 0``. With
        ``beta = 0`` the bulk problem decouples and is solved first.
    tol : float
        Relative residual tolerance of the conjugate gradient solve.
    max_iter : int or None
        Iteration cap; defaults to ten times the system size.
    use_cube_cache : bool
        Share one set of local matrices among all interior cubes.

    Attributes
    ----------
    bulk_solution_ : ndarray, shape (N,)
    surface_solution_ : ndarray, shape (M,)
    matrices_ : GlobalMatrices
    solve_stats_ : SolveStats
    mesh_ : PolyMesh
    """

    def __init__(self, alpha=1.0, beta=1.0, tol=1e-10, max_iter=None, use_cube_cache=True):
        self.alpha = alpha
        self.beta = beta
        self.tol = tol
        self.max_iter = max_iter
        self.use_cube_cache = use_cube_cache

    def fit(self, mesh, f, g):
        """Assemble and solve on ``mesh``.

        ``f`` and ``g`` are callables on points ``(k, 3)`` or nodal arrays of
        length N (bulk) and M (surface).
        """
        alpha, beta = check_coupling(self.alpha, self.beta)
        tol = check_tolerance(self.tol)
        mesh = check_mesh(mesh)
        V = mesh.vertices
        f_nodal = check_nodal(f, V, "f")
        g_nodal = check_nodal(g, V[: mesh.num_boundary_nodes], "g")

        mats = assemble_global(mesh, CubeCache(), use_cache=self.use_cube_cache)
        system = build_coupled_system(mats, alpha, beta, f_nodal, g_nodal)
        (xi, eta), stats = solve(system, tol=tol, max_iter=self.max_iter)
        logger.info("fit: N=%d M=%d, %d iterations", mesh.num_nodes, mesh.num_boundary_nodes, stats.iterations)

        self.mesh_ = mesh
        self.matrices_ = mats
        self.system_ = system
        self.bulk_solution_ = xi
        self.surface_solution_ = eta
        self.solve_stats_ = stats
        return self

    def _check_fitted(self):
        if not hasattr(self, "bulk_solution_"):
            raise NotFittedError("call fit before using this estimator")

    def errors(self, problem):
        """``(e_bulk, e_surf, e_combined)`` against a manufactured solution."""
        self._check_fitted()
        return compute_error(self.mesh_, self.bulk_solution_, self.surface_solution_, problem, self.matrices_)

    def score(self, problem):
        """Negative combined L2 error, so that larger is better."""
        return -self.errors(problem)[2]

    @property
    def solution_(self):
        self._check_fitted()
        return np.concatenate([self.bulk_solution_, self.surface_solution_])
