import math

import numpy as np
import pytest

from magiso import geom, magfem, radial
from magiso.eigsolve import hermitian_defect
from magiso.mesh import mesh_star_domain
from magiso.validation import DomainError
from oracles import pencil_eigvals


@pytest.fixture(scope="module")
def coarse():
    return mesh_star_domain(geom.disk(1.0), 0.25)


def test_quadrature_is_degree_four():
    P, W = magfem.QUAD_POINTS, magfem.QUAD_WEIGHTS
    assert W.sum() == pytest.approx(1.0, abs=1e-12)
    # int over the reference triangle of l1^a l2^b = a! b! 2! / (a+b+2)!  (area-normalized)
    for a, b in [(2, 2), (4, 0), (3, 1), (1, 1)]:
        exact = math.factorial(a) * math.factorial(b) * 2 / math.factorial(a + b + 2)
        assert np.sum(W * P[:, 0] ** a * P[:, 1] ** b) == pytest.approx(exact, rel=1e-10)


def test_assembly_hermitian_and_real_mass(coarse):
    f = magfem.assemble(coarse, 3.0)
    assert hermitian_defect(f.full_stiffness) < 1e-13
    assert f.mass.dtype.kind == "f"
    assert magfem.gauge_defect(f) < 1e-13


@pytest.mark.parametrize("B", [0.0, 2.0, 7.0])
def test_eigenvalue_against_dense_jacobi(coarse, B):
    f = magfem.assemble(coarse, B)
    ref = pencil_eigvals(f.stiffness, f.mass)[0]
    res = magfem.principal_eigenpair(f, tol=1e-12)
    assert res.eigenvalue == pytest.approx(ref, rel=1e-10)
    assert magfem.rayleigh_quotient(f, res.eigenfunction) == pytest.approx(res.eigenvalue, rel=1e-10)


def test_gauge_center_difference_vanishes_with_h(coarse):
    from magiso.mesh import refine

    diffs = []
    m = coarse
    for _ in range(3):
        a = magfem.principal_eigenpair(magfem.assemble(m, 4.0)).eigenvalue
        b = magfem.principal_eigenpair(magfem.assemble(m, 4.0, center=(0.3, -0.2))).eigenvalue
        diffs.append(abs(a - b))
        m = refine(m)
    assert diffs[0] / diffs[1] > 3 and diffs[1] / diffs[2] > 3


def test_diamagnetic_and_landau(coarse):
    lam0 = magfem.solve(coarse, 0.0).eigenvalue
    for B in [1.0, 5.0, 20.0]:
        lam = magfem.solve(coarse, B).eigenvalue
        assert lam >= lam0 and lam > B


def test_bessel_limit():
    cv = magfem.solve_levels(geom.disk(1.0), 0.0)
    assert cv.value == pytest.approx(radial.J01**2, rel=5e-3)
    assert cv.order == pytest.approx(2.0, abs=0.2)


def test_square_dirichlet_value():
    cv = magfem.solve_levels(geom.square(1.0), 0.0)
    assert cv.value == pytest.approx(2 * math.pi**2, rel=1e-4)
    assert cv.order == pytest.approx(2.0, abs=0.2)


def test_disk_matches_radial_for_field():
    cv = magfem.solve_levels(geom.disk(1.0), 5.0)
    assert cv.value == pytest.approx(radial.lambda_disk(5.0, 1.0), rel=1e-4)
    assert magfem.angular_variation(cv.finest) < 0.02


def test_angular_variation_only_for_disks():
    res = magfem.solve(mesh_star_domain(geom.ellipse(1.5, 0.7), 0.2), 1.0)
    with pytest.raises(magfem.InapplicableError):
        magfem.angular_variation(res)


def test_eigenfunction_normalized(coarse):
    f = magfem.assemble(coarse, 2.0)
    res = magfem.principal_eigenpair(f)
    v = res.eigenfunction[f.interior]
    assert np.vdot(v, f.mass @ v).real == pytest.approx(1.0, rel=1e-12)
    assert np.all(res.eigenfunction[coarse.boundary] == 0)


def test_extrapolate_exact_quadratic():
    vals = [3 + 0.5 * h**2 for h in (0.4, 0.2, 0.1)]
    v, err, order = magfem.extrapolate(vals)
    assert v == pytest.approx(3.0, abs=1e-12)
    assert order == pytest.approx(2.0)


def test_negative_field_rejected(coarse):
    with pytest.raises(ValueError):
        magfem.assemble(coarse, -1.0)


def test_degenerate_triangle_reported():
    from magiso.mesh import TriMesh

    nodes = np.array([[0, 0], [1, 0], [0, 1.0], [2, 0], [3, 1e-15]])
    m = TriMesh(nodes, np.array([[0, 1, 2], [1, 3, 4]]), np.array([True] * 5), 1.0)
    with pytest.raises(DomainError, match="degenerate triangle 1"):
        magfem.element_matrices(m, 1.0)
