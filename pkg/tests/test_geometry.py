import math

import numpy as np
import pytest

from morawetz_lab.geometry import make_obstacle, partition_boundary, sphere_area, star_shape_report


def test_sphere_area_low_dimensions():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


def test_ball_boundary_quadrature(ball):
    s = ball.boundary_nodes(16)
    np.testing.assert_allclose(s.normals, -s.points, atol=1e-14)
    assert np.sum(s.weights) == pytest.approx(4 * math.pi, rel=1e-12)
    # z^2 over the unit sphere
    assert np.sum(s.weights * s.points[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-10)


def test_shifted_ball_geometry():
    ob = make_obstacle({"shape": "ball", "center": [1, -2, 0.5], "radius": 0.5})
    s = ob.boundary_nodes(8)
    np.testing.assert_allclose(np.linalg.norm(s.points - ob.center, axis=-1), 0.5, atol=1e-14)
    assert ob.in_exterior(np.array([[5.0, 0, 0]]))[0]
    assert not ob.in_exterior(np.array([[1.0, -2, 0.6]]))[0]


def test_radial_graph_area_and_normals(bumpy):
    s = bumpy.boundary_nodes(32)
    # outward from E means pointing into the obstacle
    rel = s.points - bumpy.center
    assert np.all(np.sum(s.normals * rel, axis=-1) < 0)
    np.testing.assert_allclose(np.linalg.norm(s.normals, axis=-1), 1.0, atol=1e-12)
    unit = make_obstacle({"shape": "radial_graph", "center": [0, 0, 0], "rho": "1"})
    assert np.sum(unit.boundary_nodes(16).weights) == pytest.approx(4 * math.pi, rel=1e-10)
    assert bumpy.outer_radius == pytest.approx(1.2, rel=1e-6)


@pytest.mark.parametrize("spec, match", [
    ({"shape": "ball", "center": [0, 0, 0], "radius": -1}, "radius"),
    ({"shape": "cube", "center": [0, 0, 0]}, "shape"),
    ({"shape": "ball", "center": [0, 0], "radius": 1}, "dimension"),
    ({"shape": "radial_graph", "center": [0, 0, 0], "rho": "cos(theta)"}, "positive"),
])
def test_make_obstacle_rejects(spec, match):
    with pytest.raises(ValueError, match=match):
        make_obstacle(spec)


def test_partition_centred_and_offset(ball):
    centred = partition_boundary(ball, np.zeros(3))
    assert not centred.plus_patch.any()
    assert centred.measure("minus") == pytest.approx(4 * math.pi, rel=1e-12)

    off = partition_boundary(ball, np.array([3.0, 0, 0]))
    assert off.plus_patch.any() and off.minus_patch.any()
    total = off.measure("minus") + off.measure("plus")
    assert total == pytest.approx(4 * math.pi, rel=1e-12)


def test_partition_rejects_boundary_point(ball):
    with pytest.raises(ValueError, match="boundary"):
        partition_boundary(ball, np.array([1.0, 0, 0]))


def test_star_shape_beta(ball, bumpy):
    assert star_shape_report(ball, np.zeros(3)).beta == pytest.approx(1.0)
    rep = star_shape_report(bumpy, np.zeros(3))
    assert rep.is_star_shaped_wrt_y and 0 < rep.beta < 1
    assert not star_shape_report(ball, np.array([2.5, 0, 0])).is_star_shaped_wrt_y
