"""Electromagnetic potentials and the derived magnetic quantities.

``A`` is a real vector potential and ``V`` a real scalar potential on R^n.
The magnetic field is the antisymmetric matrix ``B = DA - (DA)^T`` with
``(DA)_ij = dA^i/dx_j`` and the tangential part about a base point ``y`` is
``B_tau^i = sum_j B_ij (x_j - y_j)/|x - y|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import sympy as sym

__all__ = [
    "PotentialPair",
    "MagneticData",
    "VSplit",
    "BUILTIN_NAMES",
    "coordinate_symbols",
    "lambdify_field",
    "potential_from_expressions",
    "builtin_potential",
    "magnetic_data",
    "v_decomposition",
    "axial_vector",
    "fd_step",
]

BUILTIN_NAMES = ("zero", "example1", "example2", "inverse_square_V", "radial_power_V",
                 "bump_V", "bump_A")


def coordinate_symbols(n: int):
    return sym.symbols(f"x1:{n + 1}", real=True)


def lambdify_field(exprs, syms, dtype=float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised evaluator ``x[..., n] -> values[..., len(exprs)]`` (or scalar field)."""
    scalar = not isinstance(exprs, (list, tuple))
    items = [exprs] if scalar else list(exprs)
    fn = sym.lambdify(syms, items, modules="numpy", cse=True)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        with np.errstate(all="ignore"):
            out = fn(*np.moveaxis(x, -1, 0))
        cols = [np.broadcast_to(np.asarray(v, dtype=dtype), shape) for v in out]
        res = np.stack(cols, axis=-1)
        return res[..., 0] if scalar else res

    return evaluate


def fd_step(x: np.ndarray) -> np.ndarray:
    """Central-difference step ``max(1e-5, 1e-5 |x|)`` per point."""
    return np.maximum(1e-5, 1e-5 * np.linalg.norm(x, axis=-1))


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Real potentials ``A`` (vector) and ``V`` (scalar) with optional derivatives."""

    n: int
    A: Callable[[np.ndarray], np.ndarray]
    V: Callable[[np.ndarray], np.ndarray]
    jac_A: Callable[[np.ndarray], np.ndarray] | None = None
    grad_V: Callable[[np.ndarray], np.ndarray] | None = None
    singular_points: tuple = ()
    singular_lines: tuple = ()
    name: str = "custom"
    params: tuple = ()
    a_is_zero: bool = False
    v_is_zero: bool = False
    A_exprs: tuple | None = field(default=None, repr=False)
    V_expr: object = field(default=None, repr=False)

    def jacobian(self, x, analytic: bool = True) -> np.ndarray:
        """``J[..., i, j] = dA^i/dx_j``; central differences when no analytic form."""
        x = np.asarray(x, dtype=float)
        if self.jac_A is not None and analytic:
            return self.jac_A(x)
        h = fd_step(x)[..., None]
        cols = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            cols.append((self.A(x + h * e) - self.A(x - h * e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def divergence_A(self, x, analytic: bool = True) -> np.ndarray:
        return np.trace(self.jacobian(x, analytic), axis1=-2, axis2=-1)

    def gradient_V(self, x, analytic: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad_V is not None and analytic:
            return self.grad_V(x)
        h = fd_step(x)[..., None]
        cols = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            cols.append((self.V(x + h * e) - self.V(x - h * e)) / (2 * h[..., 0]))
        return np.stack(cols, axis=-1)

    def singular_distance(self, x) -> np.ndarray:
        """Distance from ``x`` to the declared singular set (inf when empty)."""
        x = np.asarray(x, dtype=float)
        d = np.full(x.shape[:-1], np.inf)
        for p in self.singular_points:
            d = np.minimum(d, np.linalg.norm(x - np.asarray(p), axis=-1))
        for p, direction in self.singular_lines:
            rel = x - np.asarray(p)
            u = np.asarray(direction, dtype=float)
            u = u / np.linalg.norm(u)
            perp = rel - (rel @ u)[..., None] * u
            d = np.minimum(d, np.linalg.norm(perp, axis=-1))
        return d

    def with_V_from(self, other: "PotentialPair") -> "PotentialPair":
        """Keep this pair's ``A`` and take ``V`` from ``other``."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return replace(
            self, V=other.V, grad_V=other.grad_V, v_is_zero=other.v_is_zero, V_expr=other.V_expr,
            singular_points=tuple(dict.fromkeys(self.singular_points + other.singular_points)),
            singular_lines=tuple(dict.fromkeys(self.singular_lines + other.singular_lines)),
            name=f"{self.name}+{other.name}", params=(self.params, other.params))

    def scaled(self, a_scale: float = 1.0, v_scale: float = 1.0) -> "PotentialPair":
        A, V, J, G = self.A, self.V, self.jac_A, self.grad_V
        return replace(
            self,
            A=lambda x: a_scale * A(x),
            V=lambda x: v_scale * V(x),
            jac_A=None if J is None else (lambda x: a_scale * J(x)),
            grad_V=None if G is None else (lambda x: v_scale * G(x)),
            A_exprs=None if self.A_exprs is None else tuple(a_scale * e for e in self.A_exprs),
            V_expr=None if self.V_expr is None else v_scale * self.V_expr,
            name=f"{self.name}*({a_scale},{v_scale})")


@dataclass(frozen=True)
class MagneticData:
    B: np.ndarray
    B_tau: np.ndarray

    @property
    def axial(self) -> np.ndarray:
        return axial_vector(self.B)


@dataclass(frozen=True)
class VSplit:
    V_plus: np.ndarray
    V_minus: np.ndarray
    dr_V: np.ndarray
    dr_V_plus: np.ndarray
    dr_V_minus: np.ndarray


def axial_vector(B: np.ndarray) -> np.ndarray:
    """3D identification ``B v = b x v``: returns ``b = curl A``."""
    return np.stack([B[..., 2, 1], B[..., 0, 2], B[..., 1, 0]], axis=-1)


def potential_from_expressions(A_exprs: Sequence | None, V_expr, n: int, *, name: str = "custom",
                               params: tuple = (), singular_points: tuple = (),
                               singular_lines: tuple = ()) -> PotentialPair:
    """Potential pair from sympy expressions in ``coordinate_symbols(n)``."""
    X = coordinate_symbols(n)
    A_exprs = tuple(sym.sympify(e) for e in (A_exprs if A_exprs is not None else [0] * n))
    V_expr = sym.sympify(V_expr if V_expr is not None else 0)
    if len(A_exprs) != n:
        raise ValueError(f"A needs {n} components")
    jac = [[sym.diff(A_exprs[i], X[j]) for j in range(n)] for i in range(n)]
    grad = [sym.diff(V_expr, X[j]) for j in range(n)]
    jac_flat = lambdify_field([e for row in jac for e in row], X)
    return PotentialPair(
        n=n,
        A=lambdify_field(list(A_exprs), X),
        V=lambdify_field(V_expr, X),
        jac_A=lambda x: jac_flat(x).reshape(np.shape(x)[:-1] + (n, n)),
        grad_V=lambdify_field(grad, X),
        singular_points=tuple(tuple(map(float, p)) for p in singular_points),
        singular_lines=tuple(singular_lines),
        name=name, params=tuple(params),
        a_is_zero=all(e == 0 for e in A_exprs), v_is_zero=(V_expr == 0),
        A_exprs=A_exprs, V_expr=V_expr)


def _center(params: Sequence[float], start: int, n: int) -> np.ndarray:
    rest = list(params[start:])
    if not rest:
        return np.zeros(n)
    if len(rest) != n:
        raise ValueError(f"center needs {n} coordinates, got {len(rest)}")
    return np.asarray(rest, dtype=float)


def builtin_potential(name: str, params: Sequence[float] = (), n: int = 3) -> PotentialPair:
    """Library potentials.

    ================  ==========================================  =========
    name              fields                                      params
    ================  ==========================================  =========
    zero              A = 0, V = 0
    example1          A = (-y, x, 0)/|x - c|^2 (shifted by c)     [c]
    example2          A = (-y, x, 0)/(x^2 + y^2) about a z-line   [c1, c2]
    inverse_square_V  V = C/|x - c|^2                             C, [c]
    radial_power_V    V = C |x - c|^-p                            C, p, [c]
    bump_V            V = a exp(-((|x - c| - r0)/w)^2)            a, r0, w, [c]
    bump_A            A = a exp(-((|x - c| - r0)/w)^2) (-y, x, 0)  a, r0, w, [c]
    ================  ==========================================  =========
    """
    params = tuple(float(p) for p in params)
    X = coordinate_symbols(n)
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown potential {name!r}; choose from {BUILTIN_NAMES}")
    if name == "zero":
        return potential_from_expressions(None, 0, n, name=name)
    if name in ("example1", "example2", "bump_A") and n != 3:
        raise ValueError(f"{name} is a three-dimensional potential")

    if name in ("example1", "example2"):
        if name == "example1":
            c = _center(params, 0, 3)
        else:
            c = np.zeros(3)
            if params:
                if len(params) != 2:
                    raise ValueError("example2 takes the axis offset (c1, c2)")
                c[:2] = params
        dx = [X[i] - c[i] for i in range(3)]
        if name == "example1":
            den = dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2
            sing = {"singular_points": (tuple(c),)}
        else:
            den = dx[0] ** 2 + dx[1] ** 2
            sing = {"singular_lines": ((tuple(c), (0.0, 0.0, 1.0)),)}
        A = [-dx[1] / den, dx[0] / den, sym.Integer(0)]
        return potential_from_expressions(A, 0, 3, name=name, params=params, **sing)

    if name == "inverse_square_V":
        if not params:
            raise ValueError("inverse_square_V needs the amplitude C")
        c = _center(params, 1, n)
        r2 = sum((X[i] - c[i]) ** 2 for i in range(n))
        return potential_from_expressions(None, params[0] / r2, n, name=name, params=params,
                                          singular_points=(tuple(c),))
    if name == "radial_power_V":
        if len(params) < 2:
            raise ValueError("radial_power_V needs C and p")
        c = _center(params, 2, n)
        r = sym.sqrt(sum((X[i] - c[i]) ** 2 for i in range(n)))
        return potential_from_expressions(None, params[0] * r ** (-params[1]), n, name=name,
                                          params=params, singular_points=(tuple(c),))
    if len(params) < 3:
        raise ValueError(f"{name} needs amplitude, r0 and width")
    amp, r0, width = params[:3]
    if width <= 0:
        raise ValueError("bump width must be positive")
    c = _center(params, 3, n)
    r = sym.sqrt(sum((X[i] - c[i]) ** 2 for i in range(n)))
    bump = amp * sym.exp(-((r - r0) / width) ** 2)
    # the profile has a kink at the center unless r0 == 0
    sing = (tuple(c),) if r0 != 0 else ()
    if name == "bump_V":
        return potential_from_expressions(None, bump, n, name=name, params=params, singular_points=sing)
    A = [-(X[1] - c[1]) * bump, (X[0] - c[0]) * bump, sym.Integer(0)]
    return potential_from_expressions(A, 0, 3, name=name, params=params, singular_points=sing)


def _guard(p: PotentialPair, x: np.ndarray, tol: float):
    if np.any(p.singular_distance(x) <= tol):
        raise ValueError("evaluation point within tolerance of the potential's singular set")


def magnetic_data(p: PotentialPair, y, x, *, analytic: bool = True, tol: float = 1e-8) -> MagneticData:
    """``B = DA - DA^T`` and ``B_tau = B (x - y)/|x - y|`` at points ``x``."""
    x = np.asarray(x, dtype=float)
    _guard(p, x, tol)
    J = p.jacobian(x, analytic)
    B = J - np.swapaxes(J, -1, -2)
    rel = x - np.asarray(y, dtype=float)
    dist = np.linalg.norm(rel, axis=-1, keepdims=True)
    if np.any(dist == 0):
        raise ValueError("B_tau is undefined at the base point")
    B_tau = np.einsum("...ij,...j->...i", B, rel / dist)
    return MagneticData(B, B_tau)


def v_decomposition(p: PotentialPair, x, y, *, analytic: bool = True) -> VSplit:
    """Positive/negative parts of ``V`` and of its radial derivative about ``y``.

    A vanishing value splits as (0, 0).
    """
    x = np.asarray(x, dtype=float)
    V = np.asarray(p.V(x), dtype=float)
    rel = x - np.asarray(y, dtype=float)
    dist = np.linalg.norm(rel, axis=-1, keepdims=True)
    if np.any(dist == 0):
        raise ValueError("radial derivative is undefined at the base point")
    drV = np.sum(p.gradient_V(x, analytic) * rel / dist, axis=-1)
    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(drV))):
        raise ValueError("potential is not finite at the evaluation points")
    return VSplit(np.maximum(V, 0.0), np.maximum(-V, 0.0), drV,
                  np.maximum(drV, 0.0), np.maximum(-drV, 0.0))
