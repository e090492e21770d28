import numpy as np
import pytest

from morawetz_lab.multipliers import hessian_quadratic_form, multiplier_set

R_VALUES = np.array([0.05, 0.3, 0.9, 1.0, 1.7, 4.0, 40.0])


@pytest.fixture(params=[3, 4, 6])
def ms(request):
    return multiplier_set(1.0, 0.8, 2.5, request.param)


def test_phi_continuous_at_R(ms):
    left = ms.phi(np.array([ms.R]))[0]
    right = ms.phi(np.array([np.nextafter(ms.R, np.inf)]))[0]
    assert right == pytest.approx(left, abs=1e-14)


def test_derivatives_by_differences(ms):
    r = R_VALUES[R_VALUES != ms.R]
    h = 1e-6
    np.testing.assert_allclose((ms.phi(r + h) - ms.phi(r - h)) / (2 * h), ms.dphi(r), rtol=1e-7)
    np.testing.assert_allclose((ms.dphi(r + h) - ms.dphi(r - h)) / (2 * h), ms.d2phi(r), rtol=1e-6,
                               atol=1e-9)
    lap = ms.d2phi(r) + (ms.n - 1) / r * ms.dphi(r)
    np.testing.assert_allclose(ms.lap_phi(r), lap, rtol=1e-12)
    np.testing.assert_allclose(ms.combined(r), ms.lap_phi(r) + 2 * ms.varphi(r), rtol=1e-12)
    np.testing.assert_allclose((ms.combined(r + h) - ms.combined(r - h)) / (2 * h), ms.dcombined(r),
                               rtol=1e-6, atol=1e-9)


def test_slope_is_increasing_and_bounded(ms):
    r = np.linspace(0, 60, 2001)
    d = ms.dphi(r)
    assert np.all(np.diff(d) >= -1e-15)
    assert d[-1] < ms.slope_limit
    assert ms.slope_limit - d[-1] < 1e-3
    assert np.all(ms.d2phi(r[1:]) > 0)


def test_laplacian_mean_at_R(ms):
    inner, outer = ms._lap_branches(np.array([ms.R]))
    assert ms.lap_phi(np.array([ms.R]))[0] == pytest.approx(0.5 * (inner + outer)[0])
    assert inner[0] - outer[0] == pytest.approx(ms.lap_jump())


def test_default_alpha_and_validation():
    assert multiplier_set(n=5).alpha == 5.0
    with pytest.raises(ValueError, match="dimension"):
        multiplier_set(n=2)
    with pytest.raises(ValueError, match="R must be positive"):
        multiplier_set(R=0.0)
    with pytest.raises(ValueError, match="base point"):
        multiplier_set(y=[0, 0])
    with pytest.raises(ValueError, match="nonnegative"):
        multiplier_set().phi(np.array([-1.0]))


def test_parts_by_dimension():
    p3 = multiplier_set(2.0, 1.5, 1.0, 3).parts()
    assert p3.point_mass == pytest.approx(-8 * np.pi * 1.5)
    assert p3.inner_coef == p3.outer_coef == 0.0
    p4 = multiplier_set(1.0, 1.0, 4.0, 4).parts()
    assert p4.point_mass == 0.0
    # inner density is -M (n-1)(n-3)/r^3
    assert p4.regular_density(0.5) == pytest.approx(-3.0 / 0.125)


def test_hessian_form():
    ms = multiplier_set(1.0, 1.0, 3.0, 3)
    r = np.array([0.5, 2.0])
    value = hessian_quadratic_form(ms, np.array([1.0, 2.0j]), np.array([0.5, 0.0]), r)
    expected = ms.d2phi(r) * np.array([1.0, 4.0]) + ms.dphi(r) / r * np.array([0.25, 0.0])
    np.testing.assert_allclose(value, expected)
    assert np.all(value > 0)
    with pytest.raises(ValueError):
        hessian_quadratic_form(ms, 1.0, 1.0, np.array([0.0]))
