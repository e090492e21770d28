import numpy as np
import pytest
import sympy as sym

from morawetz_lab.fields import builtin_potential
from morawetz_lab.manufactured import (apply_operator, compact_bump, dirichlet_factor, gaussian,
                                       manufactured_field, outgoing_wave, poly_bump, shell_bump,
                                       smooth_bump, smooth_step)


def test_profiles():
    s = sym.Symbol("s", real=True)
    assert smooth_bump(s).subs(s, 0) == 1
    assert smooth_bump(s).subs(s, 1) == 0
    assert poly_bump(s, 3).subs(s, sym.Rational(1, 2)) == sym.Rational(27, 64)
    assert smooth_step(s).subs(s, -1) == 0 and smooth_step(s).subs(s, 2) == 1
    assert float(smooth_step(s).subs(s, 0.5)) == pytest.approx(0.5)


def test_bump_support_and_finiteness(rng):
    mf = compact_bump([3, 0, 0], 1.5, wavevector=[1, 0, 0])
    x = rng.uniform(-5, 5, (2000, 3))
    u = mf.u(x)
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(mf.lap(x)))
    outside = np.linalg.norm(x - [3, 0, 0], axis=-1) >= 1.5
    assert np.all(u[outside] == 0)
    edge = np.array([[3 + 1.5 * np.cos(t), 1.5 * np.sin(t), 0] for t in np.linspace(0, 1, 7)])
    assert np.all(np.isfinite(mf.grad(edge)))


def test_shell_bump_angular_factor():
    mf = shell_bump(3.0, 1.0, phase_k=2.0, angular="1 + x1/r")
    x = np.array([[3.0, 0, 0], [-3.0, 0, 0], [0, 0, 4.5]])
    np.testing.assert_allclose(mf.u(x), [2 * np.exp(6j), 0, 0], atol=1e-14)


def test_laplacian_by_differences():
    mf = gaussian([0.3, 0, -0.2], 1.3)
    x = np.array([[0.5, 0.1, 0.4], [1.1, -0.7, 0.2]])
    h = 1e-4
    lap = sum((mf.u(x + e) - 2 * mf.u(x) + mf.u(x - e)) / h**2 for e in h * np.eye(3))
    np.testing.assert_allclose(mf.lap(x), lap, rtol=1e-6)


def test_dirichlet_factor_vanishes(ball, bumpy):
    for ob in (ball, bumpy):
        mf = manufactured_field(dirichlet_factor(ob), 3)
        s = ob.boundary_nodes(8)
        assert np.max(np.abs(mf.u(s.points))) < 1e-12


def test_outgoing_wave_shape(ball):
    mf = outgoing_wave(2.0, 3.0, 6.0, obstacle=ball)
    x = np.array([[2.0, 0, 0], [0, 7.0, 0]])
    expected = np.exp(4j) / 2 * (1 - 1 / 2)
    np.testing.assert_allclose(mf.u(x), [expected, 0], atol=1e-14)


def test_apply_operator_gauge_covariance(rng):
    """``Delta_{A + grad chi}(e^{i chi} u) = e^{i chi} Delta_A u``."""
    x1, x2, x3 = sym.symbols("x1:4", real=True)
    chi = x1 * x2 / 3 + sym.sin(x3)
    base = gaussian([0, 0, 0], 1.5)
    twisted = manufactured_field(sym.exp(sym.I * chi) * base.expr, 3)
    from morawetz_lab.fields import potential_from_expressions
    A0 = [0.2 * x2, -0.1 * x3, 0.3 * x1]
    p0 = potential_from_expressions(A0, x1**2 / 5, 3)
    p1 = potential_from_expressions([a + sym.diff(chi, xi) for a, xi in zip(A0, (x1, x2, x3))],
                                    x1**2 / 5, 3)
    x = rng.normal(size=(50, 3))
    phase = np.exp(1j * (x[:, 0] * x[:, 1] / 3 + np.sin(x[:, 2])))
    lhs = apply_operator(twisted, p1, 1.3, 0.2, -1, x)
    rhs = phase * apply_operator(base, p0, 1.3, 0.2, -1, x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_string_expressions():
    mf = manufactured_field("x1*exp(I*x2)", 3)
    assert mf.u(np.array([[2.0, np.pi, 0]])) == pytest.approx(-2.0)
    assert builtin_potential("zero").a_is_zero
