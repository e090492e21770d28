"""Dyadic and Morrey-type functionals on shell grids.

Fields are grid arrays extended by zero outside ``E cap B_y(R_out)``.  Every
``sup over R`` runs over ``grid.sup_radii()``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import PotentialPair, magnetic_data, v_decomposition
from .quadrature import ShellGrid, integrate_volume, simpson_weights

__all__ = [
    "SmallnessReport",
    "DualityResult",
    "dyadic_N",
    "shell_masses",
    "morrey_profile",
    "morrey_sup",
    "joint_morrey_sup",
    "sphere_sup_profile",
    "weighted_radial_norm",
    "smallness_report",
    "duality_check",
]


def _as_array(values, grid: ShellGrid) -> np.ndarray:
    v = np.asarray(values)
    if v.shape != grid.shape:
        v = np.broadcast_to(v, grid.shape)
    return v


def shell_masses(f, grid: ShellGrid, j_range=None) -> dict[int, float]:
    """``int_{C_y(j)} |f|^2`` for each shell index ``j``."""
    j_range = grid.dyadic_range() if j_range is None else j_range
    if len(j_range) == 0:
        raise ValueError("empty shell range")
    q = np.abs(_as_array(f, grid)) ** 2
    return {j: float(np.real(grid.ball_integral(q, 2.0 ** (j + 1)) - grid.ball_integral(q, 2.0**j)))
            for j in j_range}


def dyadic_N(f, grid: ShellGrid, j_range=None) -> float:
    """``sum_j (2^{j+1} int_{C_y(j)} |f|^2)^{1/2}`` over ``j_range``."""
    masses = shell_masses(f, grid, j_range)
    return float(sum(np.sqrt(max(2.0 ** (j + 1) * m, 0.0)) for j, m in masses.items()))


def _check_nonnegative(g: np.ndarray):
    g = np.real_if_close(g)
    if np.iscomplexobj(g):
        raise ValueError("Morrey functionals need a real nonnegative field")
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if np.any(g < -1e-14 * max(scale, 1e-300)):
        raise ValueError("Morrey functionals need a nonnegative field")
    return g


def morrey_profile(g, grid: ShellGrid, kind: str = "ball") -> tuple[np.ndarray, np.ndarray]:
    """Radii and ``R^-1 int_{B_y(R)} g`` (ball) or ``R^-2 int_{S_y(R)} g`` (sphere)."""
    g = _check_nonnegative(_as_array(g, grid))
    radii = grid.sup_radii()
    if kind == "ball":
        vals = [float(grid.ball_integral(g, R)) / R for R in radii]
    elif kind == "sphere":
        vals = [float(grid.sphere_integral(g, R)) / R**2 for R in radii]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return radii, np.asarray(vals)


def morrey_sup(g, grid: ShellGrid, kind: str = "ball") -> float:
    radii, vals = morrey_profile(g, grid, kind)
    return float(max(vals.max(), 0.0))


def joint_morrey_sup(g_ball, g_sphere, grid: ShellGrid) -> tuple[float, float]:
    """``sup_R (R^-1 int_B g_ball + R^-2 int_S g_sphere)`` and the maximizing radius."""
    radii, vb = morrey_profile(g_ball, grid, "ball")
    _, vs = morrey_profile(g_sphere, grid, "sphere")
    total = vb + vs
    i = int(np.argmax(total))
    return float(max(total[i], 0.0)), float(radii[i])


def sphere_sup_profile(h, grid: ShellGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Radii, Simpson weights in ``rho`` and ``sup_{S_y(rho)} |h|`` per radius.

    Uniform segments use the grid rows directly; a mapped inner layer is
    sampled by interpolation on rays that reach each radius.
    """
    h = np.abs(_as_array(h, grid))
    radii, wts, sups = [], [], []
    for seg in grid.segments:
        count = seg.count
        if seg.mapped:
            lo, hi = float(seg.a.min()), float(seg.b.max())
            rho = np.linspace(lo, hi, count + 1)
            s = []
            for R in rho:
                vals, covered = grid.sphere_values(h, R)
                s.append(float(np.max(np.abs(vals[covered]))) if covered.any() else 0.0)
            s = np.asarray(s)
        else:
            rho = grid.r[0, 0, seg.slice]
            s = np.max(h[..., seg.slice], axis=(0, 1))
        radii.append(rho)
        wts.append(simpson_weights(count) * (rho[-1] - rho[0]) / count)
        sups.append(s)
    return np.concatenate(radii), np.concatenate(wts), np.concatenate(sups)


def weighted_radial_norm(h, grid: ShellGrid, weight_power: float = 0.0, p: float = 2) -> float:
    """``(int sup_{|x-y|=rho} (|x-y|^w |h|)^p drho)^{1/p}``; ``p=inf`` gives the grid sup."""
    h = np.abs(_as_array(h, grid)) * grid.r ** weight_power
    if np.isinf(p):
        return float(np.max(h)) if h.size else 0.0
    if p not in (1, 2):
        raise ValueError("p must be 1, 2 or inf")
    _, w, s = sphere_sup_profile(h, grid)
    return float(np.sum(w * s**p) ** (1.0 / p))


@dataclass(frozen=True)
class SmallnessReport:
    C1: float
    C2: float
    C3: float
    delta_total: float
    n: int
    node_count: int

    def as_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "C3": self.C3, "delta_total": self.delta_total,
                "dim": self.n, "angular_nodes": self.node_count}


def smallness_report(p: PotentialPair, grid: ShellGrid, *, tol: float = 1e-8) -> SmallnessReport:
    """Smallness norms of ``B_tau``, ``(d_r V)_+`` and ``V_+`` about ``grid.y``.

    n = 3: weighted ``L^2_r L^inf`` / ``L^1_r L^inf`` norms with weights
    ``r^{3/2}``, ``r^2``, ``r``; n >= 4: sup norms with weights ``r^2``, ``r^3``, ``r^2``.
    """
    if p.n != grid.n:
        raise ValueError("potential and grid dimensions differ")
    x = grid.points
    if np.any(p.singular_distance(x) <= tol):
        raise ValueError("potential is singular on the shell grid")
    md = magnetic_data(p, grid.y, x, tol=tol)
    b_tau = np.linalg.norm(md.B_tau, axis=-1)
    vs = v_decomposition(p, x, grid.y)
    if grid.n == 3:
        c1 = weighted_radial_norm(b_tau, grid, 1.5, 2)
        c2 = weighted_radial_norm(vs.dr_V_plus, grid, 2.0, 1)
        c3 = weighted_radial_norm(vs.V_plus, grid, 1.0, 1)
    else:
        c1 = weighted_radial_norm(b_tau, grid, 2.0, np.inf)
        c2 = weighted_radial_norm(vs.dr_V_plus, grid, 3.0, np.inf)
        c3 = weighted_radial_norm(vs.V_plus, grid, 2.0, np.inf)
    nodes = grid.shape[0] * grid.shape[1]
    return SmallnessReport(c1, c2, c3, c1 + c2 + c3, grid.n, nodes)


@dataclass(frozen=True)
class DualityResult:
    lhs: float
    rhs: float
    holds: bool


def duality_check(f, g, grid: ShellGrid, tol: float = 1e-9) -> DualityResult:
    """``|int f g| <= N_y(f) (sup_R R^-1 int_{B_y(R)} |g|^2)^{1/2}``."""
    f = _as_array(f, grid)
    g = _as_array(g, grid)
    lhs = float(np.abs(integrate_volume(f * g, grid)))
    rhs = dyadic_N(f, grid) * np.sqrt(morrey_sup(np.abs(g) ** 2, grid, "ball"))
    return DualityResult(lhs, float(rhs), bool(lhs <= rhs * (1 + tol) + 1e-300))
