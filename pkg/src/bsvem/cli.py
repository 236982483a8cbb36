"""Command line interface.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import logging
import sys
import time

import numpy as np

from .domain import box, ellipsoid, sphere
from .exceptions import NumericalFailure, ValidationError
from .harness import bench_assembly, compute_error, run_convergence
from .mesh import load_mesh, save_mesh
from .mesher import generate_cut_extrude
from .problems import constant_problem, sphere_problem
from .quality import check_regularity
from .system import assemble_global, build_coupled_system, export_matrix_market, solve
from .validation import check_levels
from .vem_cell import CubeCache
from .vtk import export_vtk

logger = logging.getLogger("bsvem")

DOMAINS = {"sphere": sphere, "box": box, "ellipsoid": ellipsoid}
PROBLEMS = {"sphere": sphere_problem, "constant": constant_problem}


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, so they share exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _levels(text):
    try:
        return check_levels(text.split(","))
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _mesh_from_args(args, default_domain):
    if getattr(args, "mesh", None):
        return load_mesh(args.mesh)
    domain = DOMAINS[args.domain]() if args.domain else default_domain
    return generate_cut_extrude(domain, args.n)


def cmd_mesh(args):
    mesh = generate_cut_extrude(DOMAINS[args.domain](), args.n)
    report = check_regularity(mesh)
    print(f"nodes N={mesh.num_nodes}  boundary nodes M={mesh.num_boundary_nodes}")
    print(f"cells {mesh.num_cells} ({mesh.num_exterior_cells} extruded), boundary faces {len(mesh.boundary_faces)}")
    print(f"h_nominal={mesh.h_nominal:.4f}  h_max={report.h_max:.4f}  "
          f"gamma1={report.gamma1_observed:.4f}  gamma2={report.gamma2_observed:.4f}")
    if args.out:
        save_mesh(mesh, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_solve(args):
    problem = PROBLEMS[args.problem]()
    mesh = _mesh_from_args(args, problem.domain)
    t0 = time.perf_counter()
    mats = assemble_global(mesh, CubeCache())
    t_asm = time.perf_counter() - t0
    V = mesh.vertices
    system = build_coupled_system(mats, problem.alpha, problem.beta, problem.f(V), problem.g(V[: mesh.num_boundary_nodes]))
    (xi, eta), stats = solve(system, tol=args.tol)
    e_bulk, e_surf, e_all = compute_error(mesh, xi, eta, problem, mats)
    print(f"N={mesh.num_nodes} M={mesh.num_boundary_nodes} assembly {t_asm:.3f}s")
    print(f"CG: {stats.iterations} iterations, residual {stats.residual:.3e}, {stats.wall_time:.3f}s")
    print(f"L2 errors: bulk {e_bulk:.4e}  surface {e_surf:.4e}  combined {e_all:.4e}")
    if args.vtk:
        M = mesh.num_boundary_nodes
        export_vtk(mesh, {"U": xi, "V": eta, "U_error": np.abs(xi - problem.u(V)),
                          "V_error": np.abs(eta - problem.v(V[:M]))}, args.vtk)
        print(f"wrote {args.vtk}")
    if args.matrix_market:
        export_matrix_market(system.K, args.matrix_market)
        print(f"wrote {args.matrix_market}")
    return 0


def cmd_converge(args):
    problem = PROBLEMS[args.problem]()
    report = run_convergence(problem, args.levels, tol=args.tol)
    print(report.format_table())
    if args.csv:
        report.write_csv(args.csv)
        print(f"wrote {args.csv}")
    return 0


def cmd_bench(args):
    mesh = generate_cut_extrude(DOMAINS[args.domain](), args.n)
    rep = bench_assembly(mesh, uncached=not args.cached_only)
    print(f"cells {rep.total_cells} ({rep.exterior_cells} extruded)")
    print(f"local builds: {rep.distinct_builds} with cube cache, {rep.builds_without_cache} without")
    line = f"assembly: {rep.time_cached_s:.3f}s cached"
    if rep.time_uncached_s is not None:
        line += f", {rep.time_uncached_s:.3f}s uncached (speedup {rep.speedup:.2f}x)"
    print(line)
    return 0


def build_parser():
    p = _Parser(prog="bsvem", description="Bulk-surface virtual element solver")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mesh", help="generate a cut-and-extrude mesh")
    m.add_argument("--domain", choices=sorted(DOMAINS), default="sphere")
    m.add_argument("--n", type=int, required=True, help="subdivisions per axis")
    m.add_argument("--out", help="write the mesh as JSON")
    m.set_defaults(func=cmd_mesh)

    s = sub.add_parser("solve", help="solve a manufactured problem and report errors")
    group = s.add_mutually_exclusive_group(required=True)
    group.add_argument("--mesh", help="mesh JSON file")
    group.add_argument("--n", type=int, help="generate a mesh with n subdivisions per axis")
    s.add_argument("--domain", choices=sorted(DOMAINS), help="domain for --n (default: the problem's)")
    s.add_argument("--problem", choices=sorted(PROBLEMS), default="sphere")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--vtk", help="write solution and pointwise errors as legacy VTK")
    s.add_argument("--matrix-market", help="write the coupled matrix in MatrixMarket format")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("converge", help="convergence study over grid resolutions")
    c.add_argument("--levels", type=_levels, default=[5, 10, 15, 20], help="comma-separated n values")
    c.add_argument("--problem", choices=sorted(PROBLEMS), default="sphere")
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--csv", help="write the table as CSV")
    c.set_defaults(func=cmd_converge)

    b = sub.add_parser("bench", help="assembly cost with and without the cube cache")
    b.add_argument("--domain", choices=sorted(DOMAINS), default="sphere")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--cached-only", action="store_true", help="skip the uncached baseline")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
