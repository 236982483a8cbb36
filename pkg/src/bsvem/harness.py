"""Error computation, convergence studies and assembly benchmarks."""

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import DimensionMismatch, IoFailure
from .mesh import PolyMesh
from .mesher import generate_cut_extrude
from .problems import ManufacturedProblem
from .quadrature import box_rule, simplex_points
from .system import GlobalMatrices, assemble_global, build_coupled_system, solve
from .validation import check_levels
from .vem_cell import CubeCache

logger = logging.getLogger(__name__)

__all__ = [
    "compute_error",
    "ConvergenceRow",
    "ConvergenceReport",
    "run_convergence",
    "eoc",
    "BenchReport",
    "bench_assembly",
]

ERROR_QUAD_DEGREE = 6


def _cell_tets(points, loops):
    """Centroid-apex tetrahedra over a centroid fan of every face, ``(t, 4, 3)``."""
    apex = points.mean(axis=0)
    out = []
    for loop in loops:
        p = points[np.asarray(loop)]
        fc = p.mean(axis=0)
        t = np.empty((len(p), 4, 3))
        t[:, 0] = apex
        t[:, 1] = fc
        t[:, 2] = p
        t[:, 3] = np.roll(p, -1, axis=0)
        out.append(t)
    return np.concatenate(out)


def _face_tris(points):
    fc = points.mean(axis=0)
    t = np.empty((len(points), 3, 3))
    t[:, 0] = fc
    t[:, 1] = points
    t[:, 2] = np.roll(points, -1, axis=0)
    return t


def compute_error(mesh: PolyMesh, xi, eta, problem: ManufacturedProblem, mats: Optional[GlobalMatrices] = None,
                  degree=ERROR_QUAD_DEGREE, chunk=4096):
    """Discrete L2 errors ``(e_bulk, e_surf, e_combined)``.

    The numerical solution enters through its elementwise polynomial
    projections; the exact solution is sampled at quadrature points on the
    polyhedral domain. Cubes use a tensor Gauss rule, every other cell a
    signed sub-tetrahedral decomposition, faces a centroid fan of triangles.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if xi.shape != (mesh.num_nodes,) or eta.shape != (mesh.num_boundary_nodes,):
        raise DimensionMismatch("solution vectors do not match the mesh")
    if mats is None:
        mats = assemble_global(mesh)

    bulk = 0.0
    cubes = np.flatnonzero(mesh.cube_cells)
    ref_ops = mats.cell_ops[cubes[0]] if len(cubes) else None
    # only cubes sharing the cached operators of the reference cube [0, s]^3 take the tensor path
    if ref_ops is None or not np.allclose(ref_ops.centroid, 0.5 * mesh.cube_side, rtol=0, atol=1e-14):
        ref_ops = None
    cubes = [c for c in cubes if mats.cell_ops[c] is ref_ops]
    cube_set = set(cubes)
    if cubes:
        q = degree // 2 + 1
        qp, qw = box_rule((0, 0, 0), (mesh.cube_side,) * 3, q)
        Xq = (qp - ref_ops.centroid) / ref_ops.diameter
        basis = np.column_stack([np.ones(len(Xq)), Xq]) @ ref_ops.proj_nabla_star  # (q, 8)
        conn = np.array([mesh.cell_nodes[c] for c in cubes])
        origin = mesh.vertices[conn[:, 0]]
        for s in range(0, len(cubes), chunk):
            sl = slice(s, s + chunk)
            pts = origin[sl, None, :] + qp[None, :, :]
            uh = xi[conn[sl]] @ basis.T
            ue = problem.u(pts.reshape(-1, 3)).reshape(uh.shape)
            bulk += float((((ue - uh) ** 2) @ qw).sum())
    for c in range(mesh.num_cells):
        if c in cube_set:
            continue
        nodes, loops = mesh.cell_loops(c)
        ops = mats.cell_ops[c]
        pts, w = simplex_points(_cell_tets(mesh.vertices[nodes], loops), degree)
        pts, w = pts.reshape(-1, 3), w.ravel()
        uh = ops.evaluate(ops.proj_nabla_star @ xi[nodes], pts)
        bulk += float(((problem.u(pts) - uh) ** 2) @ w)

    surf = 0.0
    for f in mesh.boundary_faces:
        ids = mesh.faces[f]
        ops = mats.face_ops[int(f)]
        pts, w = simplex_points(_face_tris(mesh.vertices[ids]), degree)
        pts, w = pts.reshape(-1, 3), w.ravel()
        vh = ops.evaluate(ops.proj_nabla_star @ eta[ids], pts)
        surf += float(((problem.v(pts) - vh) ** 2) @ w)

    e_bulk, e_surf = math.sqrt(bulk), math.sqrt(surf)
    return e_bulk, e_surf, math.hypot(e_bulk, e_surf)


def eoc(e_prev, e_cur, h_prev, h_cur):
    """Experimental order of convergence between two refinements."""
    return math.log(e_prev / e_cur) / math.log(h_prev / h_cur)


@dataclass
class ConvergenceRow:
    i: int
    N: int
    M: int
    h: float
    error: float
    eoc: Optional[float]
    assembly_s: float
    solve_s: float


CSV_HEADER = ("i", "N", "M", "h", "error", "eoc", "assembly_s", "solve_s")


def _g6(x):
    return f"{x:.6g}"


@dataclass
class ConvergenceReport:
    rows: List[ConvergenceRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.i, r.N, r.M, _g6(r.h), _g6(r.error), "" if r.eoc is None else _g6(r.eoc),
                        _g6(r.assembly_s), _g6(r.solve_s)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConvergenceReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise IoFailure(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            i, N, M, h, err, e, a, s = rec
            rows.append(ConvergenceRow(int(i), int(N), int(M), float(h), float(err),
                                       None if e == "" else float(e), float(a), float(s)))
        return cls(rows)

    def write_csv(self, path):
        try:
            Path(path).write_text(self.to_csv())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    def format_table(self) -> str:
        lines = [f"{'i':>2} {'N':>7} {'M':>6} {'h':>8} {'error':>11} {'EOC':>7} {'asm(s)':>8} {'solve(s)':>8}"]
        for r in self.rows:
            e = "-" if r.eoc is None else f"{r.eoc:.4f}"
            lines.append(f"{r.i:>2} {r.N:>7} {r.M:>6} {r.h:>8.4f} {r.error:>11.4e} {e:>7} "
                         f"{r.assembly_s:>8.3f} {r.solve_s:>8.3f}")
        return "\n".join(lines)


def run_convergence(problem: ManufacturedProblem, levels: Sequence[int], tol=1e-10) -> ConvergenceReport:
    """Mesh, assemble, solve and measure the error for each grid resolution."""
    levels = check_levels(levels)
    report = ConvergenceReport()
    prev = None
    for i, n in enumerate(levels, start=1):
        mesh = generate_cut_extrude(problem.domain, n)
        t0 = time.perf_counter()
        mats = assemble_global(mesh, CubeCache())
        t_asm = time.perf_counter() - t0
        V = mesh.vertices
        system = build_coupled_system(mats, problem.alpha, problem.beta, problem.f(V),
                                      problem.g(V[: mesh.num_boundary_nodes]))
        (xi, eta), stats = solve(system, tol=tol)
        err = compute_error(mesh, xi, eta, problem, mats)[2]
        h = mesh.h_nominal
        rate = None if prev is None else eoc(prev[0], err, prev[1], h)
        report.rows.append(ConvergenceRow(i, mesh.num_nodes, mesh.num_boundary_nodes, h, err, rate,
                                          t_asm, stats.wall_time))
        logger.info("level %d (n=%d): error %.4e, %d CG iterations", i, n, err, stats.iterations)
        prev = (err, h)
    return report


@dataclass
class BenchReport:
    total_cells: int
    exterior_cells: int
    distinct_builds: int
    builds_without_cache: int
    time_cached_s: float
    time_uncached_s: Optional[float]

    @property
    def speedup(self):
        if not self.time_uncached_s:
            return None
        return self.time_uncached_s / self.time_cached_s


def bench_assembly(mesh: PolyMesh, uncached=True) -> BenchReport:
    """Assembly with and without the shared cube matrices."""
    t0 = time.perf_counter()
    cached = assemble_global(mesh, CubeCache())
    t_cached = time.perf_counter() - t0
    t_plain, plain_builds = None, 0
    if uncached:
        t0 = time.perf_counter()
        plain = assemble_global(mesh, CubeCache(), use_cache=False)
        t_plain = time.perf_counter() - t0
        plain_builds = plain.local_builds
    return BenchReport(
        total_cells=mesh.num_cells,
        exterior_cells=mesh.num_exterior_cells,
        distinct_builds=cached.local_builds,
        builds_without_cache=plain_builds,
        time_cached_s=t_cached,
        time_uncached_s=t_plain,
    )
