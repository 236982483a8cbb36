"""Lowest-order bulk-surface virtual element method on polyhedral meshes."""

from .domain import LevelSetDomain, box, closest_point_project, ellipsoid, sphere
from .estimator import BulkSurfaceVEM
from .exceptions import (
    BSVEMError,
    DegenerateElement,
    DimensionMismatch,
    IoFailure,
    MissingFaceOperators,
    NegativeVolume,
    NoConvergence,
    NoInteriorCube,
    NonPlanarFace,
    NumericalFailure,
    OpenCell,
    OpenSurface,
    ProjectionFailure,
    SelfIntersectingFace,
    SingularProjector,
    ValidationError,
)
from .geometry import cell_geometry, face_geometry
from .harness import ConvergenceReport, bench_assembly, compute_error, eoc, run_convergence
from .mesh import PolyMesh, SurfaceMesh, extract_surface, load_mesh, save_mesh
from .mesher import generate_cut_extrude
from .problems import ManufacturedProblem, constant_problem, sphere_problem
from .quality import QualityReport, check_regularity
from .system import assemble_global, build_coupled_system, export_matrix_market, solve
from .vem_cell import CubeCache, build_cell_operators, cached_cube_operators
from .vem_face import apply_face_projection, build_face_operators
from .vtk import export_vtk

__version__ = "0.1.0"
