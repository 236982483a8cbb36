"""Global assembly, the coupled bulk-surface system and its iterative solution."""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.io
import scipy.sparse as sps
from scipy.sparse.linalg import cg

from .exceptions import BSVEMError, DimensionMismatch, IoFailure, NoConvergence, ValidationError
from .geometry import cell_geometry
from .mesh import PolyMesh
from .validation import check_coupling
from .vem_cell import BUILD_COUNTER, CellOperators, CubeCache, build_cell_operators, cached_cube_operators
from .vem_face import FaceOperators, face_operators

logger = logging.getLogger(__name__)

__all__ = [
    "GlobalMatrices",
    "CoupledSystem",
    "SolveStats",
    "assemble_global",
    "build_coupled_system",
    "solve",
    "export_matrix_market",
    "is_symmetric",
]


@dataclass
class GlobalMatrices:
    """Bulk and surface stiffness/mass matrices plus the local operators used.

    Iterating yields ``(A_bulk, M_bulk, A_surf, M_surf)``.
    """

    A_bulk: sps.csr_matrix
    M_bulk: sps.csr_matrix
    A_surf: sps.csr_matrix
    M_surf: sps.csr_matrix
    cell_ops: List[CellOperators] = field(repr=False)
    face_ops: Dict[int, FaceOperators] = field(repr=False)
    local_builds: int = 0

    def __iter__(self):
        return iter((self.A_bulk, self.M_bulk, self.A_surf, self.M_surf))

    @property
    def N(self):
        return self.A_bulk.shape[0]

    @property
    def M(self):
        return self.A_surf.shape[0]


def _csr(rows, cols, vals, n):
    mat = sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def _face_op(mesh, f, cache_faces, tag):
    ops = cache_faces.get(f)
    if ops is None:
        try:
            ops = face_operators(mesh.vertices[mesh.faces[f]])
        except BSVEMError as exc:
            raise type(exc)(f"{tag} face {f}: {exc}") from exc
        cache_faces[f] = ops
    return ops


def assemble_global(mesh: PolyMesh, cache: Optional[CubeCache] = None, use_cache=True) -> GlobalMatrices:
    """Assemble ``A_bulk, M_bulk`` (N x N) and ``A_surf, M_surf`` (M x M).

    Cubic cells share one set of local matrices from ``cache``; every other
    cell is built from face integral functionals that are computed once per
    face and shared with neighbours and with the surface assembly. With
    ``use_cache=False`` every cube is built individually (benchmark baseline).
    """
    if cache is None:
        cache = CubeCache()
    N, M = mesh.num_nodes, mesh.num_boundary_nodes
    builds_before = BUILD_COUNTER.value
    face_ops: Dict[int, FaceOperators] = {}
    cell_ops: List[CellOperators] = [None] * mesh.num_cells

    cube_ids = np.flatnonzero(mesh.cube_cells) if use_cache else np.array([], dtype=int)
    cube_set = set(cube_ids.tolist())

    rows, cols, kv, mv = [], [], [], []
    if len(cube_ids):
        ref = cached_cube_operators(mesh.cube_side, cache)
        conn = np.array([mesh.cell_nodes[c] for c in cube_ids])
        for c in cube_ids:
            cell_ops[c] = ref
        rows.append(np.repeat(conn, 8, axis=1).ravel())
        cols.append(np.tile(conn, (1, 8)).ravel())
        kv.append(np.broadcast_to(ref.stiffness.ravel(), (len(cube_ids), 64)).ravel())
        mv.append(np.broadcast_to(ref.mass.ravel(), (len(cube_ids), 64)).ravel())

    for c in range(mesh.num_cells):
        if c in cube_set:
            continue
        nodes, loops = mesh.cell_loops(c)
        fids, signs = mesh.cells[c]
        local = {int(g): i for i, g in enumerate(nodes)}
        try:
            geom = cell_geometry(mesh.vertices[nodes], loops)
            faces = []
            for f, s in zip(fids, signs):
                ids = np.array([local[int(g)] for g in mesh.faces[f]])
                faces.append((ids, _face_op(mesh, f, face_ops, f"cell {c}"), s))
            ops = build_cell_operators(geom, mesh.vertices[nodes], faces)
        except BSVEMError as exc:
            raise type(exc)(f"cell {c}: {exc}") from exc
        cell_ops[c] = ops
        n = len(nodes)
        rows.append(np.repeat(nodes, n))
        cols.append(np.tile(nodes, n))
        kv.append(ops.stiffness.ravel())
        mv.append(ops.mass.ravel())

    rows, cols = np.concatenate(rows), np.concatenate(cols)
    A_bulk = _csr(rows, cols, np.concatenate(kv), N)
    M_bulk = _csr(rows, cols, np.concatenate(mv), N)

    srows, scols, skv, smv = [], [], [], []
    for f in mesh.boundary_faces:
        ops = _face_op(mesh, int(f), face_ops, "boundary")
        ids = mesh.faces[f]
        n = len(ids)
        srows.append(np.repeat(ids, n))
        scols.append(np.tile(ids, n))
        skv.append(ops.stiffness.ravel())
        smv.append(ops.mass.ravel())
    srows, scols = np.concatenate(srows), np.concatenate(scols)
    A_surf = _csr(srows, scols, np.concatenate(skv), M)
    M_surf = _csr(srows, scols, np.concatenate(smv), M)

    return GlobalMatrices(
        A_bulk=A_bulk,
        M_bulk=M_bulk,
        A_surf=A_surf,
        M_surf=M_surf,
        cell_ops=cell_ops,
        face_ops=face_ops,
        local_builds=BUILD_COUNTER.value - builds_before,
    )


@dataclass
class CoupledSystem:
    K: sps.csr_matrix
    rhs: np.ndarray
    N: int
    M: int
    alpha: float
    beta: float

    @property
    def decoupled(self):
        return self.beta == 0.0


@dataclass
class SolveStats:
    iterations: int
    residual: float
    wall_time: float
    converged: bool = True


def _pad(mat, N):
    """Embed an M x M matrix into the leading block of an N x N matrix."""
    M = mat.shape[0]
    return sps.block_diag([mat, sps.csr_matrix((N - M, N - M))], format="csr")


def build_coupled_system(mats: GlobalMatrices, alpha, beta, f_nodal, g_nodal) -> CoupledSystem:
    """Coupled system in symmetric form (bulk rows scaled by alpha, surface rows by beta).

    For ``beta == 0`` the surface rows stay unscaled and the system becomes
    block lower-triangular.
    """
    A, Mb, As, Ms = mats
    N, M = A.shape[0], As.shape[0]
    alpha, beta = check_coupling(alpha, beta)
    f_nodal = np.asarray(f_nodal, dtype=float)
    g_nodal = np.asarray(g_nodal, dtype=float)
    if f_nodal.shape != (N,) or g_nodal.shape != (M,):
        raise DimensionMismatch(f"expected f of length {N} and g of length {M}, got {f_nodal.shape} and {g_nodal.shape}")

    RMs = sps.vstack([Ms, sps.csr_matrix((N - M, M))], format="csr")
    top = alpha * (A + Mb) + alpha**2 * _pad(Ms, N)
    if beta > 0:
        K = sps.bmat(
            [[top, -alpha * beta * RMs], [-alpha * beta * RMs.T, beta * (As + Ms) + beta**2 * Ms]],
            format="csr",
        )
        rhs = np.concatenate([alpha * (Mb @ f_nodal), beta * (Ms @ g_nodal)])
    else:
        K = sps.bmat([[top, None], [-alpha * RMs.T, As + Ms]], format="csr")
        rhs = np.concatenate([alpha * (Mb @ f_nodal), Ms @ g_nodal])
    K.sort_indices()
    return CoupledSystem(K=K, rhs=rhs, N=N, M=M, alpha=alpha, beta=beta)


def _pcg(K, b, tol, max_iter):
    """Jacobi-preconditioned CG; retries from the last iterate if the true residual lags."""
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b), 0, 0.0
    diag = K.diagonal()
    if np.any(diag <= 0):
        raise ValidationError("matrix has non-positive diagonal entries; not SPD")
    precond = sps.diags(1.0 / diag)
    count = [0]

    def cb(_):
        count[0] += 1

    x = None
    for _ in range(5):
        x, info = cg(K, b, x0=x, rtol=tol, atol=0.0, maxiter=max_iter, M=precond, callback=cb)
        res = np.linalg.norm(K @ x - b) / nb
        if res <= tol:
            return x, count[0], res
        if info > 0 and count[0] >= max_iter:
            break
    raise NoConvergence(
        f"CG stopped at relative residual {res:.3e} after {count[0]} iterations",
        solution=x,
        stats=SolveStats(iterations=count[0], residual=res, wall_time=float("nan"), converged=False),
    )


def solve(system: CoupledSystem, tol=1e-10, max_iter=None):
    """Solve the coupled system; returns ``(xi, eta), SolveStats``.

    The symmetric system goes to Jacobi-preconditioned CG. In the decoupled
    case the bulk block is solved first and the surface block second, with
    the bulk trace as data.
    """
    N, M = system.N, system.M
    if max_iter is None:
        max_iter = 10 * (N + M)
    t0 = time.perf_counter()
    try:
        if not system.decoupled:
            x, its, _ = _pcg(system.K, system.rhs, tol, max_iter)
        else:
            Kb = system.K[:N, :N]
            xi, it1, _ = _pcg(Kb, system.rhs[:N], tol, max_iter)
            rhs2 = system.rhs[N:] - system.K[N:, :N] @ xi
            eta, it2, _ = _pcg(system.K[N:, N:], rhs2, tol, max_iter)
            x, its = np.concatenate([xi, eta]), it1 + it2
    except NoConvergence as exc:
        exc.stats.wall_time = time.perf_counter() - t0
        raise
    wall = time.perf_counter() - t0
    nb = np.linalg.norm(system.rhs)
    res = 0.0 if nb == 0 else float(np.linalg.norm(system.K @ x - system.rhs) / nb)
    logger.debug("solve: %d iterations, residual %.3e, %.3fs", its, res, wall)
    return (x[:N], x[N:]), SolveStats(iterations=its, residual=res, wall_time=wall)


def is_symmetric(mat, tol=1e-12):
    """Entrywise symmetry relative to the largest entry."""
    diff = abs(mat - mat.T)
    scale = max(abs(mat).max(), 1e-300)
    return diff.max() <= tol * scale if diff.nnz else True


def export_matrix_market(mat, path, symmetric=None):
    """Write a sparse matrix in MatrixMarket coordinate format."""
    if symmetric is None:
        symmetric = is_symmetric(mat)
    try:
        scipy.io.mmwrite(str(path), sps.coo_matrix(mat), symmetry="symmetric" if symmetric else "general")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
