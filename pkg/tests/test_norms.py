import math

import numpy as np
import pytest

from morawetz_lab.fields import builtin_potential
from morawetz_lab.norms import (duality_check, dyadic_N, joint_morrey_sup, morrey_profile, morrey_sup,
                                shell_masses, smallness_report, sphere_sup_profile, weighted_radial_norm)


def test_shell_masses_add_up(grid):
    f = np.exp(-grid.r / 3) * (1 + 0.5j * grid.points[..., 2])
    masses = shell_masses(f, grid)
    total = float(np.real(grid.ball_integral(np.abs(f) ** 2, 8.0)))
    assert sum(masses.values()) == pytest.approx(total, rel=1e-12)


def test_morrey_of_constant_is_attained_at_the_largest_radius(grid):
    ones = np.ones(grid.shape)
    radii, values = morrey_profile(ones, grid)
    # int_{1<|x|<R} 1 / R grows like R^2
    assert morrey_sup(ones, grid) == pytest.approx(np.max(values))
    assert radii[np.argmax(values)] >= 8.0
    sphere = morrey_sup(ones, grid, "sphere")
    assert sphere == pytest.approx(4 * math.pi, rel=1e-10)


def test_joint_sup_uses_one_radius(grid):
    a = np.exp(-((grid.r - 2) ** 2))
    b = np.exp(-((grid.r - 6) ** 2))
    value, R_star = joint_morrey_sup(a, b, grid)
    assert value <= morrey_sup(a, grid) + morrey_sup(b, grid, "sphere") + 1e-12
    assert R_star > 0


def test_sphere_profile(grid):
    radii, weights, sups = sphere_sup_profile(grid.r, grid)
    np.testing.assert_allclose(sups, radii)
    assert np.sum(weights) == pytest.approx(7.0)


def test_morrey_rejects_signed_fields(grid):
    with pytest.raises(ValueError, match="nonnegative"):
        morrey_sup(-np.ones(grid.shape), grid)
    with pytest.raises(ValueError, match="real"):
        morrey_sup(1j * np.ones(grid.shape), grid)


def test_weighted_radial_norm(grid):
    # L^1_r L^inf of r^-3 * r^2 over [1, 8] is log 8, up to Simpson error
    assert weighted_radial_norm(grid.r**-3, grid, 2.0, 1) == pytest.approx(math.log(8), rel=1e-4)
    assert weighted_radial_norm(np.ones(grid.shape), grid, 0.0, 2) == pytest.approx(math.sqrt(7))
    with pytest.raises(ValueError, match="p must be"):
        weighted_radial_norm(np.ones(grid.shape), grid, 0.0, 3)
    assert weighted_radial_norm(grid.r**-2, grid, 2.0, np.inf) == pytest.approx(1.0)


def test_smallness_three_dimensional(grid):
    rep = smallness_report(builtin_potential("inverse_square_V", [0.5]), grid)
    # V_+ r = 0.5/r, integrated in r over [1, 8]
    assert rep.C3 == pytest.approx(0.5 * math.log(8), rel=1e-4)
    assert rep.C2 == 0.0 and rep.C1 == 0.0
    assert rep.delta_total == pytest.approx(rep.C1 + rep.C2 + rep.C3)
    with pytest.raises(ValueError, match="dimensions"):
        smallness_report(builtin_potential("zero", n=4), grid)


def test_duality_counterexample_free(grid):
    f = np.exp(-((grid.r - 3) ** 2))
    res = duality_check(f, f, grid)
    assert res.holds and res.lhs > 0
    assert duality_check(np.zeros(grid.shape), f, grid).lhs == 0.0


def test_dyadic_N_scaling_and_range(grid):
    f = np.exp(-grid.r)
    assert dyadic_N(3 * f, grid) == pytest.approx(3 * dyadic_N(f, grid))
    with pytest.raises(ValueError, match="empty"):
        dyadic_N(f, grid, range(0))
