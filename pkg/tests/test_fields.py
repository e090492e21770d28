import numpy as np
import pytest

from morawetz_lab.fields import (BUILTIN_NAMES, builtin_potential, coordinate_symbols, magnetic_data,
                                 potential_from_expressions, v_decomposition)


@pytest.fixture
def points(rng):
    x = rng.uniform(-3, 3, (200, 3))
    return x[np.linalg.norm(x, axis=-1) > 0.5]


def test_builtin_catalogue():
    for name in BUILTIN_NAMES:
        params = {"inverse_square_V": [1.0], "radial_power_V": [1.0, 3.0],
                  "bump_V": [1.0, 2.0, 0.5], "bump_A": [1.0, 2.0, 0.5]}.get(name, [])
        p = builtin_potential(name, params)
        assert p.name == name and p.n == 3
    with pytest.raises(ValueError, match="unknown potential"):
        builtin_potential("coulomb")
    with pytest.raises(ValueError, match="three-dimensional"):
        builtin_potential("example1", n=4)
    with pytest.raises(ValueError, match="center"):
        builtin_potential("bump_V", [1, 2, 0.5, 0, 0])


def test_analytic_jacobian_matches_differences(points):
    for p in (builtin_potential("example1"), builtin_potential("bump_A", [0.8, 1.5, 0.7, 0.2, 0, 0])):
        np.testing.assert_allclose(p.jacobian(points), p.jacobian(points, analytic=False), atol=1e-7)
    v = builtin_potential("bump_V", [1.0, 2.0, 0.5])
    np.testing.assert_allclose(v.gradient_V(points), v.gradient_V(points, analytic=False), atol=1e-7)


def test_axial_vector_is_curl(points):
    p = builtin_potential("bump_A", [1.0, 0.0, 1.0])
    J = p.jacobian(points, analytic=False)
    curl = np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], -1)
    np.testing.assert_allclose(magnetic_data(p, np.zeros(3), points).axial, curl, atol=1e-7)


def test_example2_is_nontrapping_about_axis_points(points):
    p = builtin_potential("example2")
    md = magnetic_data(p, np.array([0, 0, 0.7]), points)
    assert np.max(np.abs(md.B)) < 1e-12
    assert np.max(np.abs(p.divergence_A(points))) < 1e-12


def test_singular_guard():
    p = builtin_potential("example1", [1.0, 0, 0])
    with pytest.raises(ValueError, match="singular"):
        magnetic_data(p, np.zeros(3), np.array([[1.0, 0, 1e-10]]))
    with pytest.raises(ValueError, match="base point"):
        magnetic_data(builtin_potential("zero"), np.zeros(3), np.zeros((1, 3)))


def test_v_decomposition_splits(points):
    X = coordinate_symbols(3)
    p = potential_from_expressions(None, X[0] - X[1] ** 2, 3)
    vs = v_decomposition(p, points, np.zeros(3))
    V = points[:, 0] - points[:, 1] ** 2
    np.testing.assert_allclose(vs.V_plus - vs.V_minus, V, atol=1e-14)
    assert np.all(vs.V_plus >= 0) and np.all(vs.V_minus >= 0)
    assert np.all(vs.V_plus * vs.V_minus == 0)
    np.testing.assert_allclose(vs.dr_V_plus - vs.dr_V_minus, vs.dr_V, atol=1e-14)


def test_scaled_and_combined(points):
    a = builtin_potential("example1")
    v = builtin_potential("bump_V", [2.0, 1.0, 0.5])
    both = a.with_V_from(v).scaled(0.5, -3.0)
    np.testing.assert_allclose(both.A(points), 0.5 * a.A(points))
    np.testing.assert_allclose(both.V(points), -3.0 * v.V(points))
    np.testing.assert_allclose(both.jacobian(points), 0.5 * a.jacobian(points))
    assert both.singular_points == ((0.0, 0.0, 0.0),)


def test_expression_potential_validation():
    with pytest.raises(ValueError, match="components"):
        potential_from_expressions([0, 0], 0, 3)
    X = coordinate_symbols(4)
    p = potential_from_expressions(None, X[3] ** 2, 4)
    assert p.a_is_zero and not p.v_is_zero
    assert p.V(np.array([[0, 0, 0, 2.0]])) == pytest.approx(4.0)
