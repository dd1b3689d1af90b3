import json
import math

import numpy as np
import pytest

from magiso import geom
from magiso.mesh import (DistributionFunction, TriMesh, gradient_norms, mesh_star_domain,
                         refine, signed_areas, superlevel_geometry)
from magiso.validation import DomainError


@pytest.fixture(scope="module")
def disk_mesh():
    return mesh_star_domain(geom.disk(1.0), 0.1)


def test_orientation_and_boundary(disk_mesh):
    assert np.all(signed_areas(disk_mesh.nodes, disk_mesh.triangles) > 0)
    b = disk_mesh.nodes[disk_mesh.boundary]
    np.testing.assert_allclose(np.hypot(*b.T), 1.0, atol=1e-6)
    assert not disk_mesh.boundary[0]


def test_area_converges_second_order():
    errs = []
    m = mesh_star_domain(geom.disk(1.0), 0.25)
    for _ in range(3):
        errs.append(abs(m.area() - math.pi))
        m = refine(m)
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_square_mesh_area_exact():
    m = mesh_star_domain(geom.square(1.0), 0.1)
    assert m.area() == pytest.approx(1.0, rel=1e-12)


def test_refine_counts(disk_mesh):
    r = refine(disk_mesh)
    assert r.n_triangles == 4 * disk_mesh.n_triangles
    assert r.h == pytest.approx(disk_mesh.h / 2)
    nb = disk_mesh.boundary.sum()
    assert r.boundary.sum() == 2 * nb


def test_rejects_inverted_triangles():
    nodes = np.array([[0, 0], [1, 0], [0, 1.0]])
    with pytest.raises(DomainError, match="triangle 0"):
        TriMesh(nodes, np.array([[0, 2, 1]]), np.array([True] * 3), 1.0)


def test_too_coarse():
    with pytest.raises(DomainError):
        mesh_star_domain(geom.disk(1.0), 0.9)


def test_json_export(disk_mesh):
    d = json.loads(disk_mesh.to_json())
    assert set(d) == {"nodes", "triangles", "boundary_flags"}
    assert len(d["nodes"]) == disk_mesh.n_nodes


def _cone(mesh):
    return np.maximum(1 - np.hypot(*mesh.nodes.T), 0.0)


def test_distribution_function_exact_for_cone(disk_mesh):
    u = _cone(disk_mesh)
    F = DistributionFunction(disk_mesh, u)
    for z in [0.1, 0.4, 0.77]:
        sl = superlevel_geometry(disk_mesh, u, z)
        assert F(z) == pytest.approx(sl.superlevel_area, rel=1e-12)
        # the cone's level sets are nearly circles of radius 1 - z
        assert F(z) == pytest.approx(math.pi * (1 - z) ** 2, rel=3e-2)
    assert F(-1.0) == pytest.approx(disk_mesh.area())
    assert F(2.0) == 0.0


def test_derivative_is_minus_inverse_gradient_integral(disk_mesh):
    u = _cone(disk_mesh) ** 2 + 0.1 * disk_mesh.nodes[:, 0] * _cone(disk_mesh)
    F = DistributionFunction(disk_mesh, u)
    for z in [0.05, 0.2, 0.5]:
        sl = superlevel_geometry(disk_mesh, u, z)
        assert F.derivative(z) == pytest.approx(-sl.inverse_gradient_integral, rel=1e-10)
        h = 1e-6
        assert F.derivative(z) == pytest.approx((F(z + h) - F(z - h)) / (2 * h), rel=1e-4)


def test_contours_close_and_bound_area(disk_mesh):
    u = _cone(disk_mesh)
    sl = superlevel_geometry(disk_mesh, u, 0.3)
    loops = sl.closed_loops()
    assert len(loops) == 1 and all(sl.closed)
    assert geom.area(loops) == pytest.approx(sl.superlevel_area, rel=1e-10)
    assert sl.contour_length >= 2 * math.sqrt(math.pi * sl.superlevel_area)
    assert sl.contour_length == pytest.approx(geom.perimeter(loops), rel=1e-12)


def test_two_bumps_give_two_loops():
    m = mesh_star_domain(geom.ellipse(2.0, 0.5), 0.05)
    x, y = m.nodes.T
    u = np.exp(-((x - 1) ** 2 + y**2) * 8) + np.exp(-((x + 1) ** 2 + y**2) * 8)
    sl = superlevel_geometry(m, u, 0.5)
    assert len(sl.closed_loops()) == 2


def test_gradient_norms_linear_field(disk_mesh):
    u = 3 * disk_mesh.nodes[:, 0] - 4 * disk_mesh.nodes[:, 1]
    np.testing.assert_allclose(gradient_norms(disk_mesh, u), 5.0, rtol=1e-10)


def test_nonfinite_values_rejected(disk_mesh):
    u = _cone(disk_mesh)
    u[3] = np.nan
    with pytest.raises(ValueError):
        superlevel_geometry(disk_mesh, u, 0.5)
