"""Obstacles, exterior domains and boundary classification.

The exterior domain is ``E = R^n \\ Omega`` with ``Omega`` either a ball or a
star-shaped radial graph ``{x : |x - c| < rho(x_hat)}``.  Normals ``eta`` are
the outward normals of ``E``, i.e. they point into the obstacle.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi
from typing import Callable

import numpy as np

__all__ = [
    "BoundarySample",
    "Obstacle",
    "BoundaryPartition",
    "StarShapeReport",
    "make_obstacle",
    "partition_boundary",
    "star_shape_report",
    "sphere_area",
    "angles_of",
    "spherical_frame",
]

_RHO_STEP = 1e-6


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1}."""
    return 2.0 * pi ** (n / 2) / gamma(n / 2)


def angles_of(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polar and azimuthal angles of unit vectors ``w[..., :3]``."""
    theta = np.arccos(np.clip(w[..., 2], -1.0, 1.0))
    phi = np.arctan2(w[..., 1], w[..., 0])
    return theta, phi


def spherical_frame(theta, phi):
    """Orthonormal frame (e_r, e_theta, e_phi) in R^3, stacked on the last axis."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(theta)], axis=-1)
    return e_r, e_t, e_p


@dataclass(frozen=True)
class BoundarySample:
    """Quadrature nodes on a boundary surface.

    ``normals`` are the outward unit normals of the exterior domain and
    ``weights`` the surface-measure weights.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Bounded obstacle ``Omega``; immutable after construction.

    ``kind`` is ``"ball"`` or ``"radial_graph"``.  For radial graphs ``rho``
    maps polar/azimuthal angle arrays to the boundary radius about ``center``;
    ``drho`` optionally returns ``(d rho/d theta, d rho/d phi)``.
    """

    dim: int
    kind: str
    center: np.ndarray
    radius: float | None = None
    rho: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    drho: Callable | None = None
    rho_bounds: tuple[float, float] | None = None
    label: str = ""
    rho_expr: str | None = None

    # -- radial description -------------------------------------------------
    def _rho_and_derivs(self, theta, phi):
        if self.kind == "ball":
            r = np.full(np.broadcast(theta, phi).shape, self.radius)
            return r, np.zeros_like(r), np.zeros_like(r)
        rho = np.asarray(self.rho(theta, phi), dtype=float)
        if self.drho is not None:
            dt, dp = self.drho(theta, phi)
        else:
            h = _RHO_STEP
            dt = (self.rho(theta + h, phi) - self.rho(theta - h, phi)) / (2 * h)
            dp = (self.rho(theta, phi + h) - self.rho(theta, phi - h)) / (2 * h)
        return rho, np.asarray(dt, dtype=float), np.asarray(dp, dtype=float)

    @property
    def outer_radius(self) -> float:
        """Largest distance from ``center`` to the boundary."""
        if self.kind == "ball":
            return float(self.radius)
        return float(self.rho_bounds[1])

    def ray_radius(self, y, directions) -> np.ndarray:
        """Distance from ``y`` (inside Omega) to the boundary along unit ``directions``."""
        y = np.asarray(y, dtype=float)
        d = y - self.center
        if self.kind == "ball":
            b = directions @ d
            disc = b * b - (d @ d - self.radius ** 2)
            if np.any(disc < 0):
                raise ValueError("ray does not meet the ball; is y inside the obstacle?")
            return -b + np.sqrt(disc)
        if np.linalg.norm(d) > 1e-12 * max(1.0, self.outer_radius):
            raise ValueError("radial_graph rays are only defined from the graph center")
        theta, phi = angles_of(directions)
        return np.asarray(self.rho(theta, phi), dtype=float)

    def boundary_gap(self, x) -> np.ndarray:
        """Signed radial gap ``|x - c| - rho``: positive in E, negative in Omega."""
        x = np.asarray(x, dtype=float)
        rel = x - self.center
        dist = np.linalg.norm(rel, axis=-1)
        if self.kind == "ball":
            return dist - self.radius
        safe = np.where(dist[..., None] > 0, rel / np.where(dist > 0, dist, 1.0)[..., None], 0.0)
        theta, phi = angles_of(safe)
        return dist - np.asarray(self.rho(theta, phi), dtype=float)

    def in_exterior(self, x, tol: float = 0.0) -> np.ndarray:
        """True for points of the closed exterior domain E (boundary included)."""
        return self.boundary_gap(x) >= -tol

    def normal(self, x) -> np.ndarray:
        """Outward unit normal of E (pointing into Omega) at boundary points ``x``."""
        x = np.asarray(x, dtype=float)
        rel = x - self.center
        dist = np.linalg.norm(rel, axis=-1, keepdims=True)
        w = rel / dist
        if self.kind == "ball":
            return -w
        theta, phi = angles_of(w)
        rho, dt, dp = self._rho_and_derivs(theta, phi)
        e_r, e_t, e_p = spherical_frame(theta, phi)
        sin_t = np.maximum(np.sin(theta), 1e-300)
        grad = e_r - (dt / rho)[..., None] * e_t - (dp / (rho * sin_t))[..., None] * e_p
        grad /= np.linalg.norm(grad, axis=-1, keepdims=True)
        return -grad

    def boundary_nodes(self, n_theta: int = 32, n_phi: int | None = None, seed: int = 0) -> BoundarySample:
        """Boundary quadrature about the obstacle center.

        In 3D: Gauss-Legendre in cos(theta) times a uniform azimuthal rule.
        For n >= 4 (balls only) an equal-weight quasi-random sample is used.
        """
        if self.dim == 3:
            n_phi = n_phi or 2 * n_theta
            xg, wg = np.polynomial.legendre.leggauss(n_theta)
            order = np.argsort(-xg)
            theta = np.arccos(xg[order])
            wt = wg[order]
            phi = 2 * pi * np.arange(n_phi) / n_phi
            T, P = np.meshgrid(theta, phi, indexing="ij")
            e_r, _, _ = spherical_frame(T, P)
            rho, _, _ = self._rho_and_derivs(T, P)
            pts = self.center + rho[..., None] * e_r
            eta = self.normal(pts)
            cos_ray = -np.sum(eta * e_r, axis=-1)
            w = (wt[:, None] * (2 * pi / n_phi)) * rho ** 2 / cos_ray
            return BoundarySample(pts.reshape(-1, 3), eta.reshape(-1, 3), w.reshape(-1))
        if self.kind != "ball":
            raise ValueError("only ball obstacles are supported for n >= 4")
        from scipy.stats import norm, qmc

        count = n_theta * (n_phi or 2 * n_theta)
        u = qmc.Sobol(self.dim, scramble=True, seed=seed).random(count)
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        w = g / np.linalg.norm(g, axis=1, keepdims=True)
        pts = self.center + self.radius * w
        area = sphere_area(self.dim) * self.radius ** (self.dim - 1)
        return BoundarySample(pts, -w, np.full(count, area / count))


@dataclass(frozen=True)
class BoundaryPartition:
    """Split of boundary nodes by the sign of ``((x - y)/|x - y|) . eta``."""

    y: np.ndarray
    sample: BoundarySample
    cosines: np.ndarray
    minus_patch: np.ndarray
    plus_patch: np.ndarray

    def measure(self, patch: str) -> float:
        mask = self.minus_patch if patch == "minus" else self.plus_patch
        return float(np.sum(self.sample.weights[mask]))


@dataclass(frozen=True)
class StarShapeReport:
    is_star_shaped_wrt_y: bool
    beta: float
    node_count: int


def _profile_from_expr(text: str):
    import sympy as sym

    theta, phi = sym.symbols("theta phi", real=True)
    expr = sym.sympify(text, locals={"theta": theta, "phi": phi})
    f = sym.lambdify((theta, phi), expr, "numpy")
    ft = sym.lambdify((theta, phi), sym.diff(expr, theta), "numpy")
    fp = sym.lambdify((theta, phi), sym.diff(expr, phi), "numpy")

    def rho(t, p):
        return np.broadcast_to(f(t, p), np.broadcast(t, p).shape).astype(float)

    def drho(t, p):
        shape = np.broadcast(t, p).shape
        return (np.broadcast_to(ft(t, p), shape).astype(float),
                np.broadcast_to(fp(t, p), shape).astype(float))

    return rho, drho


def make_obstacle(spec: dict) -> Obstacle:
    """Build an obstacle from a shape description.

    ``{"shape": "ball", "center": [...], "radius": a}`` or
    ``{"shape": "radial_graph", "center": [...], "rho": callable | str}``; a
    string ``rho`` is a sympy expression in ``theta`` and ``phi``.
    """
    shape = spec.get("shape", "ball")
    dim = int(spec.get("dim", len(spec.get("center", (0, 0, 0)))))
    center = np.asarray(spec.get("center", np.zeros(dim)), dtype=float)
    if center.shape != (dim,):
        raise ValueError(f"center must have {dim} coordinates")
    if dim < 3:
        raise ValueError("dimension must be at least 3")
    if shape == "ball":
        radius = float(spec["radius"])
        if not radius > 0:
            raise ValueError(f"ball radius must be positive, got {radius}")
        return Obstacle(dim, "ball", center, radius=radius, label=spec.get("label", "ball"))
    if shape != "radial_graph":
        raise ValueError(f"unknown obstacle shape {shape!r}")
    if dim != 3:
        raise ValueError("radial_graph obstacles are three-dimensional")
    rho, drho = spec["rho"], spec.get("drho")
    rho_expr = rho if isinstance(rho, str) else None
    if rho_expr is not None:
        rho, drho = _profile_from_expr(rho_expr)
    t = np.linspace(0.0, pi, 97)
    p = np.linspace(0.0, 2 * pi, 193)
    samples = np.asarray(rho(*np.meshgrid(t, p, indexing="ij")), dtype=float)
    if not np.all(np.isfinite(samples)) or samples.min() <= 0:
        raise ValueError("rho must be finite and strictly positive on the sphere")
    lo, hi = float(samples.min()), float(samples.max())
    return Obstacle(dim, "radial_graph", center, rho=rho, drho=drho,
                    rho_bounds=(lo, hi), label=spec.get("label", "radial_graph"), rho_expr=rho_expr)


def _check_off_boundary(obstacle: Obstacle, y, tol: float):
    gap = float(obstacle.boundary_gap(np.asarray(y, dtype=float)))
    if abs(gap) <= tol:
        raise ValueError(f"reference point lies on the boundary (gap {gap:.3g})")


def partition_boundary(obstacle: Obstacle, y, sample: BoundarySample | None = None,
                       tol: float = 1e-9) -> BoundaryPartition:
    """Classify boundary nodes into the patches ``dE^-_y`` and ``dE^+_y``.

    Nodes with vanishing cosine are assigned to the minus patch.
    """
    y = np.asarray(y, dtype=float)
    _check_off_boundary(obstacle, y, tol)
    sample = sample if sample is not None else obstacle.boundary_nodes()
    rel = sample.points - y
    cosines = np.sum(rel * sample.normals, axis=-1) / np.linalg.norm(rel, axis=-1)
    minus = cosines <= 0
    return BoundaryPartition(y, sample, cosines, minus, ~minus)


def star_shape_report(obstacle: Obstacle, y, sample: BoundarySample | None = None,
                      tol: float = 1e-9) -> StarShapeReport:
    """``beta = -max ((x - y)/|x - y|) . eta`` over the boundary nodes."""
    part = partition_boundary(obstacle, y, sample, tol)
    beta = -float(np.max(part.cosines))
    return StarShapeReport(beta >= 0, beta, len(part.sample))
