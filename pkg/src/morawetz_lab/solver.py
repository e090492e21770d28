"""Finite-volume Helmholtz solver on the exterior of a ball.

Unknowns live on the nodes of a centred ``ShellGrid`` (breakpoint rows
merged).  Each node owns a spherical cell; neighbouring cells exchange
``T_e (exp(-i theta_e) u_nb - u)`` with ``theta_e = A(mid) . (x_nb - x)``
(Peierls phases), which discretizes ``Delta_A`` and is exact for pure gauges.
The volume-scaled matrix is Hermitian apart from its diagonal.

The inner sphere carries ``u = 0``.  The outer sphere carries the radiation
condition ``d_r u = (i kappa - 1/r) u`` and, optionally, an absorbing layer
``i sign s(r) u`` with a quadratic ramp ``s``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_bvp

from .fields import PotentialPair
from .geometry import Obstacle
from .morawetz import EstimateReport, HelmholtzInstance, estimate_report
from .quadrature import DiscreteField, ShellGrid, build_shell_grid

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolveResult",
    "LinearSolverError",
    "assemble_and_solve",
    "limiting_absorption_scan",
    "radial_oracle",
    "solver_grid",
]


class LinearSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Grid, outer treatment and linear solver settings.

    ``outer="auto"`` switches the absorbing layer on when ``epsilon < 1e-2``.
    ``layer_width`` defaults to a quarter of the shell thickness.
    """

    m_radial: int = 48
    angular_order: int = 16
    R_out: float | None = None
    outer: str = "auto"
    layer_width: float | None = None
    layer_strength: float = 1.0
    linear_solver: str = "sparse_direct"
    tol: float = 1e-10
    max_iter: int = 400

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.outer not in ("auto", "radiation", "absorbing_layer"):
            raise ValueError(f"unknown outer treatment {self.outer!r}")
        if self.linear_solver not in ("sparse_direct", "iterative"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")
        if self.layer_strength < 0:
            raise ValueError("layer_strength must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def layer_on(self, epsilon: float) -> bool:
        if self.outer == "auto":
            return abs(epsilon) < 1e-2
        return self.outer == "absorbing_layer"


def _layer_geometry(obstacle: Obstacle, config: SolverConfig) -> tuple[float, float]:
    R_out = config.R_out or 8.0 * obstacle.radius
    width = config.layer_width or 0.25 * (R_out - obstacle.radius)
    if not 0 < width < R_out - obstacle.radius:
        raise ValueError("layer width must lie inside the shell")
    return R_out, width


def solver_grid(obstacle: Obstacle, config: SolverConfig = SolverConfig()) -> ShellGrid:
    """The shell grid used by the solver; the layer start is always a breakpoint."""
    if obstacle.kind != "ball":
        raise ValueError("the solver handles ball obstacles only")
    if obstacle.dim != 3:
        raise ValueError("the solver is three-dimensional")
    R_out, width = _layer_geometry(obstacle, config)
    return build_shell_grid(obstacle, y=obstacle.center, R_out=R_out, m_radial=config.m_radial,
                            angular_order=config.angular_order, extra_breaks=(R_out - width,),
                            radial_only=False)


@dataclass
class _System:
    """Volume-scaled operator pieces on interior nodes ``(i_theta, i_phi, j >= 1)``."""

    shape: tuple
    diag: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    vol: np.ndarray
    edges: dict
    outer: np.ndarray
    invariant: bool
    phi_weight: np.ndarray
    phi_phase: np.ndarray


def _kappa(k: float, epsilon: float, sign: int) -> complex:
    s = np.sqrt(complex(k * k, sign * epsilon))
    return complex(s if sign > 0 else -s)


def _phase(p: PotentialPair, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if p.a_is_zero:
        return np.zeros(a.shape[:-1])
    A = np.asarray(p.A(0.5 * (a + b)), dtype=float)
    return np.sum(A * (b - a), axis=-1)


def _assemble(grid: ShellGrid, p: PotentialPair, k: float, epsilon: float, sign: int,
              layer: tuple[float, float, float] | None) -> _System:
    rr = np.unique(np.round(grid.r[0, 0], 13))
    theta, phi = grid.theta, grid.phi
    nt, nphi, nr = len(theta), len(phi), len(rr)
    dphi = 2 * np.pi / nphi
    pts = grid.y + rr[None, None, :, None] * grid.dirs[:, :, None, :]

    tf = np.concatenate([[0.0], 0.5 * (theta[1:] + theta[:-1]), [np.pi]])
    omega = (np.cos(tf[:-1]) - np.cos(tf[1:])) * dphi
    rf = 0.5 * (rr[1:] + rr[:-1])
    r_lo = np.concatenate([[rr[0]], rf])
    r_hi = np.concatenate([rf, [rr[-1]]])
    vol = (r_hi**3 - r_lo**3)[None, None, :] / 3 * omega[:, None, None] * np.ones((1, nphi, 1))
    ring = (r_hi**2 - r_lo**2) / 2

    T_r = (rf**2 / np.diff(rr))[None, None, :] * omega[:, None, None] * np.ones((1, nphi, 1))
    th_r = _phase(p, pts[..., :-1, :], pts[..., 1:, :])
    T_t = (ring / rr)[None, None, :] * (np.sin(tf[1:-1]) * dphi / np.diff(theta))[:, None, None]
    T_t = T_t * np.ones((1, nphi, 1))
    th_t = _phase(p, pts[:-1], pts[1:])
    T_p = (ring / rr)[None, None, :] * ((tf[1:] - tf[:-1]) / (np.sin(theta) * dphi))[:, None, None]
    T_p = T_p * np.ones((1, nphi, 1))
    th_p = _phase(p, pts, np.roll(pts, -1, axis=1))

    V = np.asarray(p.V(pts), dtype=float)
    coef = k * k + 1j * sign * epsilon - V
    if layer is not None:
        start, width, strength = layer
        ramp = np.clip((rr - start) / width, 0.0, None) ** 2
        coef = coef + 1j * sign * strength * k * k * ramp[None, None, :]

    diag = vol * coef
    diag[..., :-1] -= T_r
    diag[..., 1:] -= T_r
    diag[:-1] -= T_t
    diag[1:] -= T_t
    diag -= T_p
    diag -= np.roll(T_p, 1, axis=1)
    kap = _kappa(abs(k), epsilon, sign)
    outer = rr[-1] ** 2 * omega[:, None] * np.ones((1, nphi)) * (1j * kap - 1 / rr[-1])
    diag[..., -1] += outer

    # interior unknowns drop the Dirichlet row j = 0
    shape = (nt, nphi, nr - 1)
    idx = np.arange(np.prod(shape)).reshape(shape)
    full = -np.ones((nt, nphi, nr), dtype=int)
    full[..., 1:] = idx
    rows, cols, vals = [], [], []

    def couple(a, b, w):
        keep = (a >= 0) & (b >= 0)
        rows.extend([a[keep], b[keep]])
        cols.extend([b[keep], a[keep]])
        vals.extend([w[keep], np.conj(w[keep])])

    couple(full[..., :-1], full[..., 1:], T_r * np.exp(-1j * th_r))
    couple(full[:-1, :, 1:], full[1:, :, 1:], (T_t * np.exp(-1j * th_t))[..., 1:])
    couple(full[..., 1:], np.roll(full, -1, axis=1)[..., 1:], (T_p * np.exp(-1j * th_p))[..., 1:])

    def flat_in_phi(a):
        return np.allclose(a, a[:, :1], rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(a)))))

    invariant = all(flat_in_phi(a) for a in (th_r, th_t, th_p, V))
    edges = {"radial": (T_r, th_r), "polar": (T_t, th_t), "azimuthal": (T_p, th_p)}
    return _System(shape, diag[..., 1:], np.concatenate(rows), np.concatenate(cols),
                   np.concatenate(vals), vol[..., 1:], edges, outer, invariant,
                   T_p[..., 1:].mean(axis=1), th_p[..., 1:].mean(axis=1))


def _matrix(sys_: _System) -> sp.csr_matrix:
    n = int(np.prod(sys_.shape))
    off = sp.coo_matrix((sys_.vals, (sys_.rows, sys_.cols)), shape=(n, n))
    return (off + sp.diags(sys_.diag.ravel())).tocsr()


class _BlockSolver:
    """Direct solves per azimuthal Fourier mode of the phi-averaged operator."""

    def __init__(self, sys_: _System):
        nt, nphi, nr = sys_.shape
        self.shape = sys_.shape
        n = nt * nr
        # r and theta couplings (same azimuthal index), averaged over phi
        sel = (sys_.rows // nr) % nphi == (sys_.cols // nr) % nphi
        loc = lambda g: (g // (nphi * nr)) * nr + g % nr  # noqa: E731
        base = sp.coo_matrix((sys_.vals[sel] / nphi, (loc(sys_.rows[sel]), loc(sys_.cols[sel]))),
                             shape=(n, n)).tocsc()
        diag = sys_.diag.mean(axis=1).ravel()
        T, th = sys_.phi_weight, sys_.phi_phase
        self.lus = []
        for m in range(nphi):
            wm = 2 * np.pi * m / nphi
            dm = diag + (2 * T * np.cos(wm - th)).ravel()
            self.lus.append(spla.splu((base + sp.diags(dm)).tocsc()))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        nt, nphi, nr = self.shape
        R = np.fft.fft(rhs.reshape(self.shape), axis=1)
        U = np.empty_like(R)
        for m, lu in enumerate(self.lus):
            U[:, m, :] = lu.solve(np.ascontiguousarray(R[:, m, :]).ravel()).reshape(nt, nr)
        return np.fft.ifft(U, axis=1).ravel()


@dataclass(frozen=True)
class SolveResult:
    field: DiscreteField
    grid: ShellGrid
    instance: HelmholtzInstance
    method: str
    iterations: int
    linear_residual: float
    energy: dict
    epsilon_check: dict
    layer: dict | None

    @property
    def u(self) -> np.ndarray:
        return self.field.values

    def as_dict(self) -> dict:
        return {"method": self.method, "iterations": self.iterations,
                "linear_residual": self.linear_residual, "energy": self.energy,
                "epsilon_check": self.epsilon_check, "layer": self.layer,
                "solution_l2": float(np.sqrt(np.sum(self.grid.weights * np.abs(self.u) ** 2))),
                "grid": self.grid.metadata()}


def _energy_identity(sys_: _System, u: np.ndarray, f: np.ndarray, coef_vol: np.ndarray) -> dict:
    """Edge-wise ``sum vol conj(u) f`` against its summation-by-parts form."""
    full = np.concatenate([np.zeros(sys_.shape[:2] + (1,), dtype=complex), u], axis=-1)
    T_r, th_r = sys_.edges["radial"]
    T_t, th_t = sys_.edges["polar"]
    T_p, th_p = sys_.edges["azimuthal"]
    grad = (np.sum(T_r * np.abs(np.exp(-1j * th_r) * full[..., 1:] - full[..., :-1]) ** 2)
            + np.sum((T_t * np.abs(np.exp(-1j * th_t) * full[1:] - full[:-1]) ** 2)[..., 1:])
            + np.sum((T_p * np.abs(np.exp(-1j * th_p) * np.roll(full, -1, axis=1) - full) ** 2)[..., 1:]))
    mass = np.sum(coef_vol * np.abs(u) ** 2)
    bdry = np.sum(sys_.outer * np.abs(u[..., -1]) ** 2)
    source = np.sum(sys_.vol * np.conj(u) * f)
    rhs = -grad + mass + bdry
    scale = max(abs(grad), abs(mass), abs(bdry), abs(source), 1e-300)
    return {"source": complex(source), "gradient": float(grad), "mass": complex(mass),
            "outer_flux": complex(bdry), "residual": float(abs(source - rhs)),
            "relative": float(abs(source - rhs) / scale)}


def _grid_values(values, grid: ShellGrid) -> np.ndarray:
    if callable(values):
        values = values(grid.points)
    v = np.asarray(values, dtype=complex)
    if v.shape != grid.shape:
        raise ValueError(f"source has shape {v.shape}, grid has {grid.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("source has non-finite values")
    return v


def assemble_and_solve(obstacle: Obstacle, potentials: PotentialPair, k: float, epsilon: float,
                       sign: int, f, config: SolverConfig = SolverConfig(), *,
                       grid: ShellGrid | None = None) -> SolveResult:
    """Solve ``(Delta_A - V) u + (k^2 + sign i eps) u = f`` with ``u = 0`` on the ball.

    ``f`` is a callable of points or an array on the solver grid.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    layer_on = config.layer_on(epsilon)
    if epsilon == 0 and not layer_on:
        raise ValueError("epsilon = 0 needs the absorbing layer")
    grid = grid or solver_grid(obstacle, config)
    if grid.mapped or not np.allclose(grid.y, obstacle.center):
        raise ValueError("solver grids must be centred on the ball")
    if np.any(potentials.singular_distance(grid.points) <= 1e-8):
        raise ValueError("singular potential on the solver grid")
    R_out, width = _layer_geometry(obstacle, config)
    rr = np.unique(np.round(grid.r[0, 0], 13))
    layer = None
    if layer_on:
        start = grid.R_out - width
        cells = int(np.sum(rr > start + 1e-12))
        if cells < 2:
            raise ValueError("absorbing layer must span at least two radial cells")
        layer = (start, width, config.layer_strength)

    f_grid = _grid_values(f, grid)
    jmap = np.searchsorted(rr, np.round(grid.r[0, 0], 13))
    first = np.array([np.flatnonzero(jmap == j)[0] for j in range(len(rr))])
    f_nodes = f_grid[..., first][..., 1:]

    sys_ = _assemble(grid, potentials, float(k), float(epsilon), sign, layer)
    b = (sys_.vol * f_nodes).ravel()
    M = _matrix(sys_)
    iterations = 0
    if not np.any(b):
        x, method = np.zeros_like(b), "trivial"
    elif config.linear_solver == "sparse_direct" and sys_.invariant:
        x, method = _BlockSolver(sys_).solve(b), "fourier_blocks"
    elif config.linear_solver == "sparse_direct":
        x, method = spla.spsolve(M.tocsc(), b), "sparse_lu"
    else:
        pre = _BlockSolver(sys_)
        P = spla.LinearOperator(M.shape, matvec=pre.solve, dtype=complex)
        counter = {"n": 0}

        def tick(_):
            counter["n"] += 1

        x, info = spla.gmres(M, b, M=P, rtol=config.tol, atol=0.0, restart=60,
                             maxiter=config.max_iter, callback=tick, callback_type="pr_norm")
        iterations, method = counter["n"], "gmres"
        if info != 0:
            raise LinearSolverError(f"GMRES did not converge in {config.max_iter} cycles")
    bnorm = float(np.linalg.norm(b))
    lin_res = float(np.linalg.norm(M @ x - b) / bnorm) if bnorm > 0 else float(np.linalg.norm(x))
    if method not in ("gmres", "trivial") and lin_res > config.tol:
        raise LinearSolverError(f"direct solve residual {lin_res:.2e} exceeds tol {config.tol:.2e}")
    u_nodes = x.reshape(sys_.shape)

    coef_vol = sys_.diag.copy()
    # recover vol * coefficient by removing the edge and outer contributions
    coef_vol -= _edge_diagonal(sys_)
    coef_vol[..., -1] -= sys_.outer
    energy = _energy_identity(sys_, u_nodes, f_nodes, coef_vol)
    mass = float(np.sum(sys_.vol * np.abs(u_nodes) ** 2))
    pairing = float(np.sum(sys_.vol * np.abs(f_nodes * u_nodes)))
    eps_check = {"lhs": float(epsilon * mass), "rhs": pairing,
                 "holds": bool(epsilon * mass <= pairing * (1 + 1e-9) + 1e-300)}

    u_full = np.concatenate([np.zeros(sys_.shape[:2] + (1,), dtype=complex), u_nodes], axis=-1)
    u_grid = u_full[..., jmap]
    inst = HelmholtzInstance(grid, potentials, float(k), float(epsilon), sign, u_grid, f_grid,
                             "dirichlet", "solved", "solver", None,
                             {"method": method, "layer_start": None if layer is None else layer[0]})
    layer_meta = None if layer is None else {"start": layer[0], "width": layer[1],
                                             "strength": layer[2], "cells": cells}
    log.debug("solved k=%g eps=%g via %s, residual %.2e", k, epsilon, method, lin_res)
    return SolveResult(DiscreteField(u_grid, "solved"), grid, inst, method, iterations, lin_res,
                       energy, eps_check, layer_meta)


def _edge_diagonal(sys_: _System) -> np.ndarray:
    T_r, _ = sys_.edges["radial"]
    T_t, _ = sys_.edges["polar"]
    T_p, _ = sys_.edges["azimuthal"]
    d = np.zeros(T_r.shape[:2] + (T_r.shape[2] + 1,))
    d[..., :-1] -= T_r
    d[..., 1:] -= T_r
    d[:-1] -= T_t
    d[1:] -= T_t
    d -= T_p + np.roll(T_p, 1, axis=1)
    return d[..., 1:]


def limiting_absorption_scan(obstacle: Obstacle, potentials: PotentialPair, k_list: Sequence[float],
                             eps_list: Sequence[float], f, config: SolverConfig = SolverConfig(),
                             *, sign: int = 1, jobs: int = 1,
                             per_k: bool = False) -> list[EstimateReport]:
    """Solve on one fixed grid for every ``(k, eps)`` and report the first estimate.

    With ``per_k`` the source is a family ``f(points, k)``.  Quadratures stop
    at the layer start whenever the layer is on; the report meta records this
    together with the solve diagnostics.  Rows come back in ``(k, eps)`` order.
    """
    grid = solver_grid(obstacle, config)
    fixed = None if per_k else _grid_values(f, grid)
    pairs = [(float(k), float(e)) for k in k_list for e in eps_list]

    def run(pair):
        k, eps = pair
        f_grid = _grid_values(f(grid.points, k), grid) if per_k else fixed
        res = assemble_and_solve(obstacle, potentials, k, eps, sign, f_grid, config, grid=grid)
        r_max = res.layer["start"] if res.layer else None
        rep = estimate_report(res.instance, "thm11", r_max=r_max)
        meta = dict(rep.meta, k=k, epsilon=eps, sign=sign, method=res.method,
                    linear_residual=res.linear_residual,
                    solution_l2=res.as_dict()["solution_l2"],
                    energy_relative=res.energy["relative"],
                    epsilon_inequality=res.epsilon_check["holds"],
                    layer_excluded=r_max is not None)
        return replace(rep, meta=meta)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, pairs))
    return [run(p) for p in pairs]


def radial_oracle(a: float, R_out: float, k: float, epsilon: float, sign: int,
                  f_radial: Callable[[np.ndarray], np.ndarray], *,
                  layer: tuple[float, float, float] | None = None, nodes: int = 2001,
                  tol: float = 1e-10) -> Callable[[np.ndarray], np.ndarray]:
    """Radial (mode 0) solution for ``A = V = 0`` from a two-point BVP in ``w = r u``.

    ``w'' + (k^2 + sign i eps + i sign s(r)) w = r f``, ``w(a) = 0``, ``w'(R) = i kappa w(R)``.
    """
    kap = _kappa(abs(k), epsilon, sign)

    def coef(r):
        c = k * k + 1j * sign * epsilon + 0 * r
        if layer is not None:
            start, width, strength = layer
            c = c + 1j * sign * strength * k * k * np.clip((r - start) / width, 0, None) ** 2
        return c

    def rhs(r, y):
        w = y[0] + 1j * y[1]
        dw = y[2] + 1j * y[3]
        d2 = r * f_radial(r) - coef(r) * w
        return np.vstack([dw.real, dw.imag, d2.real, d2.imag])

    def bc(ya, yb):
        wb = yb[0] + 1j * yb[1]
        res = (yb[2] + 1j * yb[3]) - 1j * kap * wb
        return np.array([ya[0], ya[1], res.real, res.imag])

    r = np.linspace(a, R_out, nodes)
    sol = solve_bvp(rhs, bc, r, np.zeros((4, r.size)), tol=tol, max_nodes=200000)
    if not sol.success:
        raise LinearSolverError(f"radial oracle failed: {sol.message}")
    return lambda s: (sol.sol(s)[0] + 1j * sol.sol(s)[1]) / s
