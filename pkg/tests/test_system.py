import numpy as np
import pytest
import scipy.io
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from bsvem.exceptions import DimensionMismatch, NoConvergence, NonPlanarFace, ValidationError
from bsvem.geometry import cell_geometry, face_geometry
from bsvem.mesh import PolyMesh, extract_surface
from bsvem.problems import sphere_problem
from bsvem.system import (
    CoupledSystem,
    assemble_global,
    build_coupled_system,
    export_matrix_market,
    is_symmetric,
    solve,
)
from bsvem.vem_cell import CubeCache
from test_mesh import single_cube_mesh


def _sphere_data(mesh):
    prob = sphere_problem()
    V = mesh.vertices
    return prob, prob.f(V), prob.g(V[: mesh.num_boundary_nodes])


def test_single_cube_sums():
    A, Mb, As, Ms = assemble_global(single_cube_mesh())
    assert Mb.sum() == pytest.approx(1.0, rel=1e-14)
    assert Ms.sum() == pytest.approx(6.0, rel=1e-14)


def test_matrix_invariants(sphere10, sphere10_mats):
    mesh, mats = sphere10, sphere10_mats
    A, Mb, As, Ms = mats
    assert A.shape == (799, 799) and As.shape == (314, 314)
    assert np.abs(A @ np.ones(mats.N)).max() <= 1e-10
    assert np.abs(As @ np.ones(mats.M)).max() <= 1e-10
    for mat in mats:
        assert is_symmetric(mat, 1e-12)
    vol = sum(cell_geometry(mesh.vertices[n], l).volume for n, l in map(mesh.cell_loops, range(mesh.num_cells)))
    surf = extract_surface(mesh)
    area = sum(face_geometry(surf.vertex_positions[l])[0].area for l in surf.faces)
    assert Mb.sum() == pytest.approx(vol, rel=1e-10)
    assert Ms.sum() == pytest.approx(area, rel=1e-10)
    assert vol == pytest.approx(4 * np.pi / 3, rel=0.05)
    assert area == pytest.approx(4 * np.pi, rel=0.05)


def test_assembly_deterministic(sphere5):
    a, b = assemble_global(sphere5), assemble_global(sphere5)
    for x, y in zip(a, b):
        assert np.array_equal(x.indptr, y.indptr) and np.array_equal(x.indices, y.indices)
        assert np.array_equal(x.data, y.data)


def test_csr_sorted_without_duplicates(sphere5):
    for mat in assemble_global(sphere5):
        assert mat.has_sorted_indices and mat.has_canonical_format


def test_cache_and_generic_paths_agree(sphere5):
    a = assemble_global(sphere5, CubeCache())
    b = assemble_global(sphere5, use_cache=False)
    for x, y in zip(a, b):
        assert abs(x - y).max() <= 1e-14 * abs(x).max()


def test_element_id_in_errors():
    m = single_cube_mesh()
    V = m.vertices.copy()
    V[7, 2] += 0.01
    bent = PolyMesh(vertices=V, faces=m.faces, cells=m.cells, boundary_faces=m.boundary_faces, num_boundary_nodes=8)
    with pytest.raises(NonPlanarFace, match="cell 0"):
        assemble_global(bent)


def test_symmetrization_equivalence(sphere5):
    mats = assemble_global(sphere5)
    A, Mb, As, Ms = (m.toarray() for m in mats)
    N, M = mats.N, mats.M
    prob, f, g = _sphere_data(sphere5)
    alpha, beta = 1.3, 0.7
    R = np.zeros((N, M))
    R[:M, :M] = np.eye(M)
    # unscaled block system of the coupled discrete problem
    top = np.hstack([A + Mb + alpha * R @ Ms @ R.T, -beta * R @ Ms])
    bot = np.hstack([-alpha * Ms @ R.T, As + (beta + 1) * Ms])
    scaled = np.vstack([alpha * top, beta * bot])
    system = build_coupled_system(mats, alpha, beta, f, g)
    np.testing.assert_allclose(system.K.toarray(), scaled, atol=1e-12 * np.abs(scaled).max())
    np.testing.assert_allclose(system.rhs, np.concatenate([alpha * Mb @ f, beta * Ms @ g]), atol=1e-14)
    # interior bulk dofs never couple to surface dofs
    assert not system.K[M:N, N:].count_nonzero()


def test_coupled_spd(sphere5, rng):
    mats = assemble_global(sphere5)
    _, f, g = _sphere_data(sphere5)
    K = build_coupled_system(mats, 1.0, 2.0, f, g).K
    assert is_symmetric(K, 1e-12)
    for _ in range(100):
        x = rng.standard_normal(K.shape[0])
        assert x @ (K @ x) > 0


def test_sphere_solve_converges(sphere5):
    mats = assemble_global(sphere5)
    _, f, g = _sphere_data(sphere5)
    system = build_coupled_system(mats, 1.0, 2.0, f, g)
    (xi, eta), stats = solve(system, tol=1e-10)
    assert stats.converged and stats.residual <= 1e-10 and stats.iterations < 500
    r = system.K @ np.concatenate([xi, eta]) - system.rhs
    nb = np.linalg.norm(system.rhs)
    assert np.linalg.norm(r[: system.N]) <= 1e-10 * nb and np.linalg.norm(r[system.N :]) <= 1e-10 * nb


def test_beta_zero_decouples(sphere5):
    mats = assemble_global(sphere5)
    _, f, g = _sphere_data(sphere5)
    system = build_coupled_system(mats, 1.0, 0.0, f, g)
    (xi, eta), _ = solve(system, tol=1e-12)
    direct = spsolve(system.K.tocsc(), system.rhs)
    bulk_only = spsolve(system.K[: system.N, : system.N].tocsc(), system.rhs[: system.N])
    np.testing.assert_allclose(direct[: system.N], bulk_only, atol=1e-10)
    np.testing.assert_allclose(xi, bulk_only, atol=1e-8)
    np.testing.assert_allclose(eta, direct[system.N :], atol=1e-8)


def test_zero_data_gives_zero(sphere5):
    mats = assemble_global(sphere5)
    system = build_coupled_system(mats, 1.0, 2.0, np.zeros(mats.N), np.zeros(mats.M))
    (xi, eta), stats = solve(system)
    assert not xi.any() and not eta.any() and stats.iterations == 0


def test_mass_system_recovers_ones(sphere5):
    Mb = assemble_global(sphere5).M_bulk
    N = Mb.shape[0]
    system = CoupledSystem(K=Mb, rhs=Mb @ np.ones(N), N=N, M=0, alpha=1.0, beta=1.0)
    (x, _), stats = solve(system, tol=1e-12)
    np.testing.assert_allclose(x, 1.0, atol=1e-9)


def test_random_spd_against_dense(rng):
    n = 50
    B = sps.random(n, n, density=0.1, random_state=np.random.RandomState(3))
    K = (B @ B.T + sps.identity(n) * 0.5).tocsr()
    b = rng.standard_normal(n)
    system = CoupledSystem(K=K, rhs=b, N=n, M=0, alpha=1.0, beta=1.0)
    (x, _), _ = solve(system, tol=1e-12)
    np.testing.assert_allclose(x, np.linalg.solve(K.toarray(), b), atol=1e-8)


def test_no_convergence_reports_iterate(sphere5):
    mats = assemble_global(sphere5)
    _, f, g = _sphere_data(sphere5)
    system = build_coupled_system(mats, 1.0, 2.0, f, g)
    with pytest.raises(NoConvergence) as info:
        solve(system, tol=1e-12, max_iter=2)
    assert info.value.solution is not None and not info.value.stats.converged
    assert info.value.stats.residual > 1e-12


def test_input_validation(sphere5):
    mats = assemble_global(sphere5)
    with pytest.raises(DimensionMismatch):
        build_coupled_system(mats, 1.0, 1.0, np.zeros(3), np.zeros(mats.M))
    with pytest.raises(ValidationError):
        build_coupled_system(mats, 0.0, 1.0, np.zeros(mats.N), np.zeros(mats.M))
    with pytest.raises(ValidationError):
        build_coupled_system(mats, 1.0, -1.0, np.zeros(mats.N), np.zeros(mats.M))


def test_matrix_market_export(sphere5, tmp_path):
    mats = assemble_global(sphere5)
    path = tmp_path / "A.mtx"
    export_matrix_market(mats.A_bulk, path)
    assert path.read_text().splitlines()[0] == "%%MatrixMarket matrix coordinate real symmetric"
    back = scipy.io.mmread(str(path)).tocsr()
    assert abs(back - mats.A_bulk).max() <= 1e-15 * abs(mats.A_bulk).max()
    gen = tmp_path / "G.mtx"
    export_matrix_market(sps.csr_matrix(np.array([[1.0, 2.0], [0.0, 1.0]])), gen)
    assert "general" in gen.read_text().splitlines()[0]
