import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from bsvem.exceptions import NegativeVolume, NonPlanarFace, OpenCell, SelfIntersectingFace
from bsvem.geometry import cell_geometry, face_geometry, planarity_defect
from bsvem.quadrature import box_rule, simplex_points, tetrahedron_rule, triangle_rule
from oracles import brute_force_cell
from shapes import CUBE, CUBE_LOOPS, TET_LOOPS, random_polyhedra

SQUARE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)


def test_unit_square():
    frame, mom, local = face_geometry(SQUARE)
    assert frame.area == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(frame.origin, [0.5, 0.5, 0], atol=1e-15)
    assert frame.diameter == pytest.approx(np.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(frame.normal, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(mom.first, 0.0, atol=1e-15)


def test_right_triangle():
    frame, mom, _ = face_geometry(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float))
    assert frame.area == pytest.approx(0.5)
    np.testing.assert_allclose(frame.origin, [1 / 3, 1 / 3, 0], atol=1e-15)


def test_frame_orthonormal_and_round_trip(rng):
    from shapes import random_polygon

    for n in (3, 5, 8):
        p = random_polygon(rng, n)
        frame, _, local = face_geometry(p)
        np.testing.assert_allclose(frame.basis @ frame.basis.T, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(np.cross(*frame.basis), frame.normal, atol=1e-14)
        np.testing.assert_allclose(frame.to_global(frame.to_local(p)), p, atol=1e-12)
        np.testing.assert_allclose(frame.to_local(p), local, atol=1e-12)


def _gauss_square_moment(fun, order=10):
    # tensor Gauss over [0,1]^2
    x, w = leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    return float((np.outer(w, w) * fun(X, Y)).sum())


@pytest.mark.parametrize("rotation", [0.0, 0.7])
def test_square_second_moment_oracle(rotation):
    # the frame may be rotated; m2*m3 transforms like a tensor, so compare invariants
    c, s = np.cos(rotation), np.sin(rotation)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    frame, mom, _ = face_geometry(SQUARE @ R.T)
    h = np.sqrt(2)
    # oracle second-moment tensor in global xy, then rotate into the frame basis
    T = np.array([[_gauss_square_moment(lambda X, Y, a=a, b=b: ((X - .5) * (a == 0) + (Y - .5) * (a == 1))
                                        * ((X - .5) * (b == 0) + (Y - .5) * (b == 1))) for b in range(2)]
                  for a in range(2)]) / h**2
    E = frame.basis[:, :2] @ R[:2, :2]
    np.testing.assert_allclose(mom.second, E @ T @ E.T, atol=1e-13)


def test_trapezoid_moments_oracle():
    # non-symmetric polygon: compare against tensor Gauss on its bounding representation
    p = np.array([[0, 0, 0], [2, 0, 0], [1.5, 1, 0], [0.2, 1, 0]], dtype=float)
    frame, mom, _ = face_geometry(p)
    x, w = leggauss(12)
    t, wt = 0.5 * (x + 1), 0.5 * w
    # map (s, y) in [0,1]^2 -> x = (1-s) xl(y) + s xr(y), y
    S, Y = np.meshgrid(t, t, indexing="ij")
    xl, xr = 0.2 * Y, 2 - 0.5 * Y
    X = (1 - S) * xl + S * xr
    W = np.outer(wt, wt) * (xr - xl)
    area = W.sum()
    cx, cy = (W * X).sum() / area, (W * Y).sum() / area
    assert frame.area == pytest.approx(area, rel=1e-14)
    np.testing.assert_allclose(frame.origin[:2], [cx, cy], atol=1e-14)
    h = frame.diameter
    T = np.array([[(W * (X - cx) * (X - cx)).sum(), (W * (X - cx) * (Y - cy)).sum()],
                  [(W * (X - cx) * (Y - cy)).sum(), (W * (Y - cy) * (Y - cy)).sum()]]) / h**2
    E = frame.basis[:, :2]
    np.testing.assert_allclose(mom.second, E @ T @ E.T, atol=1e-13)


def test_non_planar_face_rejected():
    p = SQUARE.copy()
    p[2, 2] = 1e-3
    assert planarity_defect(p) > 1e-9
    with pytest.raises(NonPlanarFace):
        face_geometry(p)


def test_bow_tie_rejected():
    # edges 1-2 and 3-0 cross; the net shoelace area is positive
    p = np.array([[0, 0, 0], [2, 0, 0], [0, 1, 0], [1.5, 1.5, 0]], dtype=float)
    with pytest.raises(SelfIntersectingFace):
        face_geometry(p)


def test_unit_cube():
    g = cell_geometry(CUBE, CUBE_LOOPS)
    assert g.volume == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(g.centroid, 0.5, atol=1e-15)
    assert g.diameter == pytest.approx(np.sqrt(3))
    assert g.boundary_area == pytest.approx(6.0)


def test_unit_tetrahedron():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    g = cell_geometry(V, TET_LOOPS)
    assert g.volume == pytest.approx(1 / 6, rel=1e-15)
    np.testing.assert_allclose(g.centroid, 0.25, atol=1e-15)


def test_cube_scaled_second_moment():
    # closed form: int (x - 1/2)^2 dV / h^2 = (1/12) / 3 = 1/36
    g = cell_geometry(CUBE, CUBE_LOOPS)
    np.testing.assert_allclose(np.diag(g.moments.second), 1 / 36, atol=1e-15)
    np.testing.assert_allclose(g.moments.second - np.diag(np.diag(g.moments.second)), 0, atol=1e-15)


def test_inverted_cell_rejected():
    with pytest.raises(NegativeVolume):
        cell_geometry(CUBE, [l[::-1] for l in CUBE_LOOPS])


def test_open_cell_rejected():
    with pytest.raises(OpenCell):
        cell_geometry(CUBE, CUBE_LOOPS[:5])


def test_random_polyhedra_volume_and_closure(rng):
    for V, loops in random_polyhedra(rng, 100):
        g = cell_geometry(V, loops)
        oracle = brute_force_cell(V, loops)
        # divergence-theorem volume vs sub-tetrahedral quadrature
        assert g.volume == pytest.approx(oracle["volume"], rel=1e-12)
        np.testing.assert_allclose(g.centroid, oracle["centroid"], atol=1e-12)
        area_vec = sum(face_geometry(V[l])[0].normal * face_geometry(V[l])[0].area for l in loops)
        assert np.linalg.norm(area_vec) <= 1e-12 * g.boundary_area
        np.testing.assert_allclose(g.moments.first, 0.0, atol=1e-12 * g.volume)


def test_translation_invariance(rng):
    for V, loops in random_polyhedra(rng, 10):
        t = rng.standard_normal(3) * 5
        a, b = cell_geometry(V, loops), cell_geometry(V + t, loops)
        np.testing.assert_allclose(b.centroid, a.centroid + t, atol=1e-12)
        assert b.volume == pytest.approx(a.volume, rel=1e-12)
        assert b.diameter == pytest.approx(a.diameter, rel=1e-12)
        np.testing.assert_allclose(b.moments.second, a.moments.second, atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 4, 6, 8])
def test_simplex_rules_exact(degree):
    bary, w = triangle_rule(degree)
    assert w.sum() == pytest.approx(0.5)
    # int_T x^a y^b = a! b! / (a+b+2)!
    from math import factorial

    for a in range(degree + 1):
        b = degree - a
        val = w @ (bary[:, 1] ** a * bary[:, 2] ** b)
        assert val == pytest.approx(factorial(a) * factorial(b) / factorial(a + b + 2), rel=1e-12)
    bary, w = tetrahedron_rule(degree)
    assert w.sum() == pytest.approx(1 / 6)
    a, b, c = degree // 2, degree - degree // 2, 0
    val = w @ (bary[:, 1] ** a * bary[:, 2] ** b * bary[:, 3] ** c)
    assert val == pytest.approx(factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3), rel=1e-12)


def test_signed_simplex_weights():
    tri = np.array([[[0, 0], [1, 0], [0, 1]], [[0, 0], [0, 1], [1, 0]]], dtype=float)
    _, w = simplex_points(tri, 2)
    assert w[0].sum() == pytest.approx(0.5)
    assert w[1].sum() == pytest.approx(-0.5)


def test_box_rule():
    p, w = box_rule((0, 0, 0), (1, 2, 3), 3)
    assert w.sum() == pytest.approx(6.0)
    assert (w * p[:, 0] ** 4 * p[:, 2] ** 2).sum() == pytest.approx(1 / 5 * 2 * 9, rel=1e-13)
