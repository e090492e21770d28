import math

import numpy as np
import pytest

from morawetz_lab.geometry import make_obstacle
from morawetz_lab.quadrature import (build_shell_grid, discrete_gradient, integrate_surface,
                                     integrate_volume, simpson_weights)


def test_simpson_weights():
    w = simpson_weights(4)
    np.testing.assert_allclose(w, np.array([1, 4, 2, 4, 1]) / 3)
    with pytest.raises(ValueError):
        simpson_weights(3)


def test_breakpoints_and_metadata(grid):
    assert grid.breakpoints[:4] == (1.0, 2.0, 4.0, 8.0)
    meta = grid.metadata()
    assert meta["R_out"] == 8.0 and meta["n_theta"] == 16 and meta["n_phi"] == 32
    assert sum(meta["segment_intervals"]) == pytest.approx(48, abs=4)
    # breakpoint radii appear as duplicated rows
    assert np.sum(np.isclose(grid.r[0, 0], 2.0)) == 2


def test_volume_of_moments(grid):
    # r^3 radial densities are integrated exactly
    assert integrate_volume(grid.r, grid) == pytest.approx(math.pi * (8**4 - 1), rel=1e-12)
    x, z = grid.points[..., 0], grid.points[..., 2]
    expected = 4 * math.pi / 15 * (8**7 - 1) / 7
    # the radial factor r^6 is beyond Simpson's exact degree
    assert integrate_volume(x**2 * z**2, grid) == pytest.approx(expected, rel=1e-6)


def test_ball_integral_between_nodes(grid):
    for rho in (1.3, 2.0, 3.1, 5.5, 8.0):
        exact = 4 * math.pi * (rho**3 - 1) / 3
        assert grid.ball_integral(np.ones(grid.shape), rho).real == pytest.approx(exact, rel=1e-10)
    assert grid.ball_integral(np.ones(grid.shape), 20.0).real == pytest.approx(4 * math.pi * 511 / 3)


def test_surface_integrals(grid):
    assert integrate_surface(grid.r, grid, "sphere", 3.3).real == pytest.approx(4 * math.pi * 3.3**3)
    with pytest.raises(ValueError, match="outside"):
        integrate_surface(np.ones(grid.shape), grid, "sphere", 9.0)
    with pytest.raises(ValueError, match="radius"):
        integrate_surface(np.ones(grid.shape), grid, "sphere")
    z = grid.points[..., 2]
    upper = integrate_surface(np.ones(grid.shape), grid, mask=(z[:, :, 0] > 0).ravel())
    assert upper == pytest.approx(2 * math.pi, rel=1e-12)


def test_radial_graph_boundary_area(bumpy):
    g = build_shell_grid(bumpy, m_radial=24, angular_order=24)
    assert g.mapped
    fine = bumpy.boundary_nodes(64)
    assert integrate_surface(np.ones(g.shape), g) == pytest.approx(np.sum(fine.weights), rel=1e-6)


def test_gradient_second_order(ball, bumpy):
    for ob in (ball, bumpy):
        errs = []
        for m, a in ((24, 8), (48, 16), (96, 32)):
            g = build_shell_grid(ob, m_radial=m, angular_order=a)
            x = g.points
            v = np.sin(x[..., 0]) * np.exp(-g.r / 4) + x[..., 1] * x[..., 2] / g.r
            e2 = np.sum(np.abs(discrete_gradient(v, g) - _numeric_gradient(x)) ** 2, axis=-1)
            errs.append(math.sqrt(np.sum(g.weights * e2) / np.sum(g.weights)))
        assert min(math.log2(a / b) for a, b in zip(errs, errs[1:])) > 1.8


def _numeric_gradient(x, h=1e-6):
    def f(p):
        r = np.linalg.norm(p, axis=-1)
        return np.sin(p[..., 0]) * np.exp(-r / 4) + p[..., 1] * p[..., 2] / r

    out = np.empty(x.shape)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        out[..., j] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_gradient_exact_for_linear_fields(coarse_grid):
    a = np.array([1.0, -0.4, 2.2])
    grad = discrete_gradient(coarse_grid.points @ a + 3.0, coarse_grid)
    np.testing.assert_allclose(grad, np.broadcast_to(a, grad.shape), atol=1e-10)
    with pytest.raises(ValueError, match="shape"):
        discrete_gradient(np.ones(3), coarse_grid)


def test_refined_and_truncated(coarse_grid):
    fine = coarse_grid.refined()
    assert fine.shape[0] == 2 * coarse_grid.shape[0]
    assert [s.count for s in fine.segments] == [2 * s.count for s in coarse_grid.segments]
    cut = coarse_grid.truncated(4.0)
    assert cut.R_out == 4.0 and cut.shape[2] < coarse_grid.shape[2]
    np.testing.assert_array_equal(coarse_grid.restrict(coarse_grid.r, 4.0), cut.r)
    with pytest.raises(ValueError, match="breakpoint"):
        coarse_grid.truncated(3.0)


def test_whole_space_and_four_dimensional_grids():
    g = build_shell_grid(None, y=np.zeros(3), R_out=4.0, m_radial=32, angular_order=8, r_min=0.0)
    assert integrate_volume(np.ones(g.shape), g) == pytest.approx(4 * math.pi * 64 / 3, rel=1e-10)
    b4 = make_obstacle({"shape": "ball", "center": [0, 0, 0, 0], "radius": 1})
    g4 = build_shell_grid(b4, R_out=2.0)
    assert g4.radial_only
    assert integrate_volume(np.ones(g4.shape), g4) == pytest.approx(math.pi**2 / 2 * 15, rel=1e-10)
    with pytest.raises(ValueError, match="three-dimensional"):
        build_shell_grid(b4, radial_only=False)
