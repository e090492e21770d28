"""Symbolic test fields for manufactured instances.

A field is a sympy expression in ``coordinate_symbols(n)``; its gradient and
Laplacian are differentiated symbolically and lambdified once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import sympy as sym

from .fields import PotentialPair, coordinate_symbols, lambdify_field
from .geometry import Obstacle

_EDGE = 1e-9

__all__ = [
    "ManufacturedField",
    "manufactured_field",
    "smooth_bump",
    "smooth_step",
    "poly_bump",
    "dirichlet_factor",
    "compact_bump",
    "shell_bump",
    "outgoing_wave",
    "gaussian",
    "apply_operator",
]


@dataclass(frozen=True, eq=False)
class ManufacturedField:
    n: int
    expr: object
    u: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    lap: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"


def manufactured_field(expr, n: int = 3, label: str = "custom") -> ManufacturedField:
    X = coordinate_symbols(n)
    if isinstance(expr, str):
        expr = sym.sympify(expr, locals={f"x{i + 1}": X[i] for i in range(n)} | {"I": sym.I})
    grad = [sym.diff(expr, xi) for xi in X]
    lap = sum(sym.diff(g, xi) for g, xi in zip(grad, X))
    return ManufacturedField(n, expr, lambdify_field(expr, X, complex),
                             lambdify_field(grad, X, complex), lambdify_field(lap, X, complex), label)


def smooth_bump(s):
    """``exp(1 - 1/(1 - s^2))`` on ``|s| < 1``, zero outside; equals 1 at ``s = 0``."""
    # the margin keeps branch tests consistent with the rounded argument
    return sym.Piecewise((sym.exp(1 - 1 / (1 - s**2)), s**2 < 1 - _EDGE), (0, True))


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = sym.exp(-1 / t)
    b = sym.exp(-1 / (1 - t))
    return sym.Piecewise((0, t <= _EDGE), (1, t >= 1 - _EDGE), (a / (a + b), True))


def _radius(X, center):
    return sym.sqrt(sum((xi - c) ** 2 for xi, c in zip(X, center)))


def dirichlet_factor(obstacle: Obstacle, X=None):
    """Expression vanishing on the obstacle boundary, ``1 - rho/|x - c|``."""
    X = X or coordinate_symbols(obstacle.dim)
    r = _radius(X, obstacle.center)
    if obstacle.kind == "ball":
        return 1 - obstacle.radius / r
    if obstacle.rho_expr is None:
        raise ValueError("Dirichlet factors for radial graphs need a symbolic rho")
    theta, phi = sym.symbols("theta phi", real=True)
    rel = [xi - c for xi, c in zip(X, obstacle.center)]
    rho = sym.sympify(obstacle.rho_expr, locals={"theta": theta, "phi": phi})
    rho = rho.subs({theta: sym.acos(rel[2] / r), phi: sym.atan2(rel[1], rel[0])})
    return 1 - rho / r


def compact_bump(center: Sequence[float], width: float, wavevector: Sequence[float] | None = None,
                 n: int = 3) -> ManufacturedField:
    """Smooth bump supported in ``|x - center| < width``, times an optional plane wave."""
    X = coordinate_symbols(n)
    expr = smooth_bump(_radius(X, center) / width)
    if wavevector is not None:
        expr = expr * sym.exp(sym.I * sum(kv * xi for kv, xi in zip(wavevector, X)))
    return manufactured_field(expr, n, f"bump(c={tuple(center)},w={width})")


def poly_bump(s, power: int = 6):
    """``(1 - s^2)^power`` on ``|s| < 1``; gentler derivatives than ``smooth_bump``."""
    return sym.Piecewise(((1 - s**2) ** power, s**2 < 1), (0, True))


def shell_bump(r_center: float, width: float, *, phase_k: float = 0.0,
               angular: str | None = None, center: Sequence[float] | None = None,
               n: int = 3, power: int | None = 6) -> ManufacturedField:
    """Bump in ``|x - center|`` supported in ``|r - r_center| < width``, times
    ``exp(i phase_k r)`` and an optional sympy factor ``angular``.

    ``power=None`` uses the C-infinity profile.
    """
    X = coordinate_symbols(n)
    r = _radius(X, center or [0.0] * n)
    s = (r - r_center) / width
    profile = smooth_bump(s) if power is None else poly_bump(s, power)
    expr = profile * sym.exp(sym.I * phase_k * r)
    if angular:
        expr = expr * sym.sympify(angular, locals={f"x{i + 1}": X[i] for i in range(n)} | {"r": r})
    return manufactured_field(expr, n, f"shell_bump(r0={r_center},w={width})")


def outgoing_wave(k: float, r_flat: float, r_zero: float, *, obstacle: Obstacle | None = None,
                  center: Sequence[float] | None = None, n: int = 3,
                  angular: str | None = None) -> ManufacturedField:
    """``cutoff(r) exp(i k r)/r^{(n-1)/2}``, cut off smoothly between ``r_flat`` and ``r_zero``.

    With an obstacle the field is multiplied by its Dirichlet factor; ``angular``
    is an optional extra sympy factor in the coordinates (e.g. ``"1 + x1/4"``).
    """
    X = coordinate_symbols(n)
    center = obstacle.center if (center is None and obstacle is not None) else (center or [0.0] * n)
    r = _radius(X, center)
    cut = 1 - smooth_step((r - r_flat) / (r_zero - r_flat))
    expr = cut * sym.exp(sym.I * k * r) / r ** sym.Rational(n - 1, 2)
    if obstacle is not None:
        expr = expr * dirichlet_factor(obstacle, X)
    if angular:
        expr = expr * sym.sympify(angular, locals={f"x{i + 1}": X[i] for i in range(n)} | {"r": r})
    return manufactured_field(expr, n, f"outgoing(k={k})")


def gaussian(center: Sequence[float], width: float, n: int = 3) -> ManufacturedField:
    X = coordinate_symbols(n)
    expr = sym.exp(-sum((xi - c) ** 2 for xi, c in zip(X, center)) / width**2)
    return manufactured_field(expr, n, f"gaussian(w={width})")


def apply_operator(mf: ManufacturedField, p: PotentialPair, k: float, epsilon: float, sign: int,
                   x: np.ndarray) -> np.ndarray:
    """``(Delta_A - V) u + (k^2 + sign i eps) u`` at points ``x``."""
    u = mf.u(x)
    grad = mf.grad(x)
    A = p.A(x)
    div_A = p.divergence_A(x)
    lap_A = (mf.lap(x) - 2j * np.sum(A * grad, axis=-1) - 1j * div_A * u
             - np.sum(A * A, axis=-1) * u)
    return lap_A - p.V(x) * u + (k**2 + sign * 1j * epsilon) * u
