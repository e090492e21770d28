"""Spherical shell grids on the truncated exterior domain.

A grid is a product of directions ``omega`` (Gauss-Legendre in ``cos theta``
times a uniform azimuthal rule) and radial nodes along each ray from the base
point ``y``.  The radial axis is split into segments at breakpoints (the inner
radius, every dyadic radius ``2^j``, multiplier kink radii and ``R_out``); each
segment carries a composite Simpson rule, and nodes on a breakpoint appear once
per adjacent segment so that piecewise integrands with jumps there are
integrated exactly.  Arrays on a grid have shape ``(n_theta, n_phi, m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, floor, log2, pi

import numpy as np

from .geometry import BoundarySample, Obstacle, sphere_area, spherical_frame

__all__ = [
    "Segment",
    "ShellGrid",
    "DiscreteField",
    "build_shell_grid",
    "integrate_volume",
    "integrate_surface",
    "discrete_gradient",
    "simpson_weights",
]


@dataclass(frozen=True)
class DiscreteField:
    values: np.ndarray
    provenance: str = "analytic"

    def __post_init__(self):
        if self.provenance not in ("analytic", "solved", "manufactured"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")


def _values(field_or_array) -> np.ndarray:
    if isinstance(field_or_array, DiscreteField):
        return field_or_array.values
    return np.asarray(field_or_array)


def simpson_weights(count: int) -> np.ndarray:
    """Composite Simpson weights on ``count + 1`` unit-spaced nodes."""
    if count < 2 or count % 2:
        raise ValueError("Simpson needs an even number of intervals")
    w = np.full(count + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w / 3.0


@dataclass(frozen=True, eq=False)
class Segment:
    """Radial nodes ``start..stop`` (inclusive), uniform per ray on ``[a, b]``."""

    start: int
    stop: int
    a: np.ndarray
    b: np.ndarray
    mapped: bool

    @property
    def count(self) -> int:
        return self.stop - self.start

    @property
    def h(self) -> np.ndarray:
        return (self.b - self.a) / self.count

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop + 1)


@dataclass(frozen=True, eq=False)
class ShellGrid:
    n: int
    y: np.ndarray
    obstacle: Obstacle | None
    theta: np.ndarray
    phi: np.ndarray
    w_ang: np.ndarray
    dirs: np.ndarray
    segments: tuple
    r: np.ndarray
    r_eval: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    R_out: float
    breakpoints: tuple
    radial_only: bool
    build: dict = field(repr=False)

    @property
    def shape(self) -> tuple:
        return self.r.shape

    @property
    def size(self) -> int:
        return self.r.size

    @property
    def r_first(self) -> float:
        return float(self.r[..., 0].min())

    @property
    def mapped(self) -> bool:
        return bool(self.segments[0].mapped)

    def metadata(self) -> dict:
        return {
            "dim": self.n,
            "n_theta": int(self.shape[0]),
            "n_phi": int(self.shape[1]),
            "radial_nodes": int(self.shape[2]),
            "segment_intervals": [s.count for s in self.segments],
            "breakpoints": [float(b) for b in self.breakpoints],
            "r_inner": [float(self.r[..., 0].min()), float(self.r[..., 0].max())],
            "R_out": self.R_out,
            "radial_only": self.radial_only,
        }

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, func) -> np.ndarray:
        """``func(points)`` on the grid."""
        return np.asarray(func(self.points))

    def evaluate_radial(self, func) -> np.ndarray:
        """``func(r)`` with breakpoint rows evaluated inside their own segment."""
        return np.asarray(func(self.r_eval))

    # -- derived grids ------------------------------------------------------
    def refined(self, factor: int = 2) -> "ShellGrid":
        b = dict(self.build)
        b["segment_counts"] = tuple(factor * s.count for s in self.segments)
        if not self.radial_only:
            b["angular_order"] = factor * b["angular_order"]
        return build_shell_grid(**b)

    def truncated(self, r_max: float) -> "ShellGrid":
        """Same grid restricted to ``r <= r_max``, which must be a breakpoint."""
        if not np.any(np.isclose(self.breakpoints, r_max, rtol=1e-12, atol=0)):
            raise ValueError(f"truncation radius {r_max} is not a grid breakpoint")
        if r_max <= self.breakpoints[0]:
            raise ValueError("truncation radius leaves no radial segment")
        keep = [s.count for s in self.segments if float(np.max(s.b)) <= r_max * (1 + 1e-12)]
        b = dict(self.build)
        b["R_out"] = float(r_max)
        b["segment_counts"] = tuple(keep)
        return build_shell_grid(**b)

    def restrict(self, values, r_max: float) -> np.ndarray:
        """Values on the first ``truncated(r_max)`` radial rows."""
        m = self.truncated(r_max).shape[2]
        return _values(values)[..., :m] if np.ndim(values) == 3 else _values(values)[:, :, :m, ...]

    # -- boundary -----------------------------------------------------------
    def boundary_sample(self) -> BoundarySample:
        """Inner grid rows as a quadrature rule on the obstacle boundary."""
        if self.obstacle is None:
            raise ValueError("grid has no obstacle boundary")
        pts = self.points[:, :, 0, :]
        rin = self.r[:, :, 0]
        if self.radial_only:
            eta = -self.dirs
            w = self.w_ang * rin ** (self.n - 1)
        else:
            eta = self.obstacle.normal(pts)
            cos_ray = -np.sum(eta * self.dirs, axis=-1)
            w = self.w_ang * rin ** 2 / cos_ray
        return BoundarySample(pts.reshape(-1, self.n), eta.reshape(-1, self.n), w.reshape(-1))

    # -- ray integrals ------------------------------------------------------
    def _ray_integral(self, q: np.ndarray, rho: float) -> np.ndarray:
        """Per-ray integral of the radial density ``q`` over ``[r_in, rho]``."""
        total = np.zeros(self.shape[:2], dtype=np.result_type(q, float))
        for seg in self.segments:
            qs = q[..., seg.slice]
            h = seg.h
            f0, f1, f2 = qs[..., 0:-1:2], qs[..., 1::2], qs[..., 2::2]
            pairs = h[..., None] / 3 * (f0 + 4 * f1 + f2)
            csum = np.concatenate([np.zeros(pairs.shape[:-1] + (1,), pairs.dtype),
                                   np.cumsum(pairs, axis=-1)], axis=-1)
            t_tot = (rho - seg.a) / h
            full = t_tot >= seg.count
            inside = (t_tot > 0) & ~full
            p = np.clip(np.floor(t_tot / 2), 0, seg.count // 2 - 1).astype(int)
            t = t_tot - 2 * p
            take = lambda arr: np.take_along_axis(arr, p[..., None], axis=-1)[..., 0]
            g0, g1, g2 = take(f0), take(f1), take(f2)
            partial = take(csum) + h * (g0 * t + (-3 * g0 + 4 * g1 - g2) * t**2 / 4
                                        + (g0 - 2 * g1 + g2) * t**3 / 6)
            total = total + np.where(full, csum[..., -1], np.where(inside, partial, 0.0))
        return total

    def _ray_interp(self, v: np.ndarray, rho: float) -> np.ndarray:
        """Quadratic interpolation of ``v`` at radius ``rho`` on each ray; 0 off the grid."""
        out = np.zeros(self.shape[:2], dtype=np.result_type(v, float))
        done = np.zeros(self.shape[:2], dtype=bool)
        for seg in self.segments:
            vs = v[..., seg.slice]
            t_tot = (rho - seg.a) / seg.h
            tol = 1e-9
            hit = (t_tot >= -tol) & (t_tot <= seg.count + tol) & ~done
            t_tot = np.clip(t_tot, 0, seg.count)
            p = np.clip(np.floor(t_tot / 2), 0, seg.count // 2 - 1).astype(int)
            t = t_tot - 2 * p
            take = lambda k: np.take_along_axis(vs, (2 * p + k)[..., None], axis=-1)[..., 0]
            g0, g1, g2 = take(0), take(1), take(2)
            val = g0 + t * (-3 * g0 + 4 * g1 - g2) / 2 + t**2 * (g0 - 2 * g1 + g2) / 2
            out = np.where(hit, val, out)
            done |= hit
        return out

    def ball_integral(self, values, rho: float) -> complex:
        """``int_{E cap B_y(rho)} v`` (zero extension beyond ``R_out``)."""
        v = _values(values)
        q = v * self.r ** (self.n - 1)
        return np.sum(self.w_ang * self._ray_integral(q, rho))

    def sphere_integral(self, values, rho: float) -> complex:
        """``int_{E cap S_y(rho)} v``."""
        if rho <= 0:
            return 0.0
        v = _values(values)
        return rho ** (self.n - 1) * np.sum(self.w_ang * self._ray_interp(v, rho))

    def sphere_values(self, values, rho: float) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated values on ``S_y(rho)`` and the mask of rays that reach it."""
        v = _values(values)
        vals = self._ray_interp(v, rho)
        covered = np.zeros(self.shape[:2], dtype=bool)
        for seg in self.segments:
            covered |= (rho >= seg.a * (1 - 1e-12)) & (rho <= seg.b * (1 + 1e-12))
        return vals, covered

    def sup_radii(self) -> np.ndarray:
        """Radii used for every ``sup over R > 0``: node radii plus dyadic radii."""
        radii = [np.unique(self.r[0, 0, s.slice]) for s in self.segments if not s.mapped]
        lo = self.r_first if self.r_first > 0 else float(np.min(self.r[self.r > 0]))
        dyadic = [2.0**j for j in range(floor(log2(lo)), ceil(log2(2 * self.R_out)) + 1)]
        out = np.unique(np.concatenate(radii + [np.asarray(dyadic)]))
        return out[out > 0]

    def dyadic_range(self) -> range:
        """Shells meeting ``[r_first/2, 2 R_out]``."""
        lo = self.r_first if self.r_first > 0 else float(np.min(self.r[self.r > 0]))
        return range(floor(log2(lo / 2)), ceil(log2(2 * self.R_out)))


def _angular_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    idx = np.argsort(-x)
    theta = np.arccos(x[idx])
    n_phi = 2 * order
    phi = 2 * pi * np.arange(n_phi) / n_phi
    w_ang = np.outer(w[idx], np.full(n_phi, 2 * pi / n_phi))
    return theta, phi, w_ang


def _allocate(lengths, m_radial: int) -> list[int]:
    total = sum(lengths)
    return [max(2, 2 * int(round(m_radial * L / (2 * total)))) for L in lengths]


def build_shell_grid(obstacle: Obstacle | None, y=None, R_out: float | None = None,
                     m_radial: int = 48, angular_order: int = 16, *, n: int | None = None,
                     radial_only: bool | None = None, extra_breaks=(), segment_counts=None,
                     r_min: float = 0.0) -> ShellGrid:
    """Grid covering ``E cap B_y(R_out)``.

    ``obstacle=None`` means ``E = R^n`` with radial nodes starting at ``r_min``.
    For rays of varying length (radial graphs, off-center balls) the first
    segment is mapped per ray onto ``[r_in(omega), R_map]`` with ``R_map`` the
    smallest dyadic radius at least ``1.05 max r_in``.
    """
    build = dict(obstacle=obstacle, y=y, R_out=R_out, m_radial=m_radial,
                 angular_order=angular_order, n=n, radial_only=radial_only,
                 extra_breaks=tuple(extra_breaks), segment_counts=segment_counts, r_min=r_min)
    n = obstacle.dim if obstacle is not None else (n or (len(y) if y is not None else 3))
    if y is None:
        y = obstacle.center.copy() if obstacle is not None else np.zeros(n)
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"base point needs {n} coordinates")
    if radial_only is None:
        radial_only = n >= 4
    if n >= 4 and not radial_only:
        raise ValueError("full angular grids are three-dimensional")

    if radial_only:
        theta, phi = np.zeros(1), np.zeros(1)
        w_ang = np.full((1, 1), sphere_area(n))
        dirs = np.zeros((1, 1, n))
        dirs[..., 0] = 1.0
    else:
        if angular_order < 2:
            raise ValueError("angular order must be at least 2")
        theta, phi, w_ang = _angular_rule(angular_order)
        dirs, _, _ = spherical_frame(*np.meshgrid(theta, phi, indexing="ij"))

    if obstacle is None:
        r_in = np.full(w_ang.shape, float(r_min))
    else:
        if not obstacle.boundary_gap(y) < 0:
            raise ValueError("base point must lie inside the obstacle")
        if radial_only and not (obstacle.kind == "ball" and np.allclose(obstacle.center, y)):
            raise ValueError("radial grids need a ball centered at the base point")
        r_in = obstacle.ray_radius(y, dirs.reshape(-1, n)).reshape(w_ang.shape)
    r_top = float(r_in.max())
    mapped = float(np.ptp(r_in)) > 1e-12 * max(1.0, r_top)
    if R_out is None:
        R_out = 8.0 * r_top if r_top > 0 else 8.0
    R_out = float(R_out)

    if mapped:
        start = 2.0 ** ceil(log2(1.05 * r_top))
        if start >= R_out:
            raise ValueError(f"R_out={R_out} must exceed the mapped inner layer radius {start}")
        bad = [b for b in extra_breaks if r_in.min() < b < start]
        if bad:
            raise ValueError(f"breakpoints {bad} fall inside the mapped layer near the obstacle")
    else:
        start = r_top
        if R_out <= start:
            raise ValueError(f"R_out={R_out} must exceed the inner radius {start}")
    inner = [start]
    if start > 0:
        j0 = floor(log2(start)) + 1
    else:
        j0 = floor(log2(R_out)) - 6
    inner += [2.0**j for j in range(j0, ceil(log2(R_out)) + 1) if start < 2.0**j < R_out]
    inner += [float(b) for b in extra_breaks if start < b < R_out]
    breaks = sorted(set(inner)) + [R_out]
    breaks = [b for i, b in enumerate(breaks) if i == 0 or b - breaks[i - 1] > 1e-12 * R_out]

    spans = ([(r_in, np.full(w_ang.shape, start), True)] if mapped else [])
    spans += [(np.full(w_ang.shape, a), np.full(w_ang.shape, b), False)
              for a, b in zip(breaks[:-1], breaks[1:])]
    if segment_counts is None:
        lengths = [float(np.mean(b - a)) for a, b, _ in spans]
        counts = _allocate(lengths, m_radial)
    else:
        counts = [int(c) for c in segment_counts]
        if len(counts) != len(spans) or any(c < 2 or c % 2 for c in counts):
            raise ValueError("segment_counts must give an even count >= 2 per segment")

    segments, rows, rows_eval, wts = [], [], [], []
    pos = 0
    for (a, b, is_mapped), count in zip(spans, counts):
        t = np.linspace(0.0, 1.0, count + 1)
        rs = a[..., None] + t * (b - a)[..., None]
        re = rs.copy()
        re[..., 0] = np.nextafter(rs[..., 0], np.inf)
        re[..., -1] = np.nextafter(rs[..., -1], -np.inf)
        segments.append(Segment(pos, pos + count, a, b, is_mapped))
        rows.append(rs)
        rows_eval.append(re)
        wts.append(simpson_weights(count) * ((b - a) / count)[..., None])
        pos += count + 1
    r = np.concatenate(rows, axis=-1)
    r_eval = np.concatenate(rows_eval, axis=-1)
    weights = np.concatenate(wts, axis=-1) * r ** (n - 1) * w_ang[..., None]
    points = y + r[..., None] * dirs[:, :, None, :]
    if obstacle is not None and not np.all(obstacle.in_exterior(points, tol=1e-9 * R_out)):
        raise ValueError("grid nodes fall inside the obstacle")
    return ShellGrid(n, y, obstacle, theta, phi, w_ang, dirs, tuple(segments), r, r_eval,
                     weights, points, R_out, tuple(float(b) for b in breaks), bool(radial_only),
                     build)


def integrate_volume(field_values, grid: ShellGrid):
    v = _values(field_values)
    if v.shape[:3] != grid.shape:
        raise ValueError(f"field shape {v.shape} does not match grid {grid.shape}")
    w = grid.weights if v.ndim == 3 else grid.weights[..., None]
    return np.sum(v * w, axis=(0, 1, 2))


def integrate_surface(field_values, grid: ShellGrid, surface="boundary", radius: float | None = None,
                      mask=None):
    """Surface integral over ``S_y(radius)`` (``surface="sphere"``) or the obstacle
    boundary, optionally restricted to a boolean node ``mask`` (a patch)."""
    v = _values(field_values)
    if surface == "sphere":
        if radius is None:
            raise ValueError("sphere integrals need a radius")
        if not grid.r_first - 1e-12 <= radius <= grid.R_out * (1 + 1e-12):
            raise ValueError(f"radius {radius} outside [{grid.r_first}, {grid.R_out}]")
        return grid.sphere_integral(v, radius)
    if surface != "boundary":
        raise ValueError(f"unknown surface {surface!r}")
    w = grid.boundary_sample().weights
    vb = v.reshape(-1) if v.size == w.size else v[:, :, 0].reshape(-1)
    if mask is not None:
        return np.sum((vb * w)[np.asarray(mask, dtype=bool)])
    return np.sum(vb * w)


def _d_radial(v: np.ndarray, grid: ShellGrid) -> np.ndarray:
    out = np.empty_like(v)
    for seg in grid.segments:
        vs = v[..., seg.slice]
        h = seg.h[..., None]
        d = np.empty_like(vs)
        d[..., 1:-1] = (vs[..., 2:] - vs[..., :-2]) / (2 * h)
        d[..., 0] = (-3 * vs[..., 0] + 4 * vs[..., 1] - vs[..., 2]) / (2 * h[..., 0])
        d[..., -1] = (3 * vs[..., -1] - 4 * vs[..., -2] + vs[..., -3]) / (2 * h[..., 0])
        out[..., seg.slice] = d
    return out


def _d_trig(v: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    """Three-point derivative on nonuniform angles ``x`` along ``axis``.

    The stencil differentiates ``{1, cos, sin}`` exactly, so restrictions of
    linear fields to circles are handled without error.
    """
    v = np.moveaxis(v, axis, 0)
    m = len(x)
    if m < 3:
        return np.moveaxis(np.zeros_like(v), 0, axis)
    out = np.empty_like(v)
    shape = (-1,) + (1,) * (v.ndim - 1)
    s = lambda a, b: np.sin((a - b) / 2)

    def coeffs(x0, x1, x2, k):
        nodes = (x0, x1, x2)
        xk = nodes[k]
        c = []
        for i in range(3):
            if i == k:
                a, b = (nodes[j] for j in range(3) if j != k)
                c.append(0.5 * (1 / np.tan((xk - a) / 2) + 1 / np.tan((xk - b) / 2)))
            else:
                other = nodes[3 - i - k]
                c.append(0.5 * s(xk, other) / (s(nodes[i], xk) * s(nodes[i], other)))
        return c

    c0, c1, c2 = coeffs(x[:-2], x[1:-1], x[2:], 1)
    out[1:-1] = (c0.reshape(shape) * v[:-2] + c1.reshape(shape) * v[1:-1]
                 + c2.reshape(shape) * v[2:])
    c0, c1, c2 = coeffs(x[0], x[1], x[2], 0)
    out[0] = c0 * v[0] + c1 * v[1] + c2 * v[2]
    c0, c1, c2 = coeffs(x[-3], x[-2], x[-1], 2)
    out[-1] = c0 * v[-3] + c1 * v[-2] + c2 * v[-1]
    return np.moveaxis(out, 0, axis)


def _d_theta(v: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Polar-angle derivative; the end rows use the meridian continued across the
    pole (azimuth shifted by pi) so every stencil is centered."""
    half = v.shape[1] // 2
    top = np.roll(v[:1], half, axis=1)
    bottom = np.roll(v[-1:], half, axis=1)
    ext = np.concatenate([top, v, bottom], axis=0)
    x = np.concatenate([[-theta[0]], theta, [2 * pi - theta[-1]]])
    return _d_trig(ext, x, axis=0)[1:-1]


def _d_periodic(v: np.ndarray, dphi: float, axis: int) -> np.ndarray:
    return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * np.sin(dphi))


def discrete_gradient(field_values, grid: ShellGrid) -> np.ndarray:
    """Cartesian gradient ``(..., n)`` of a scalar grid field, second order."""
    v = _values(field_values)
    if v.shape != grid.shape:
        raise ValueError(f"field shape {v.shape} does not match grid {grid.shape}")
    if grid.shape[2] < 4:
        raise ValueError("need at least 4 radial nodes")
    u_r = _d_radial(v, grid)
    if grid.radial_only:
        return u_r[..., None] * grid.dirs[:, :, None, :]
    u_t = _d_theta(v, grid.theta)
    u_p = _d_periodic(v, 2 * pi / len(grid.phi), axis=1)
    mapped = [s for s in grid.segments if s.mapped]
    if mapped:
        # index-constant rows are curved there: correct to fixed-radius derivatives
        s = mapped[0].slice
        u_t[..., s] -= u_r[..., s] * _d_theta(grid.r[..., s], grid.theta)
        u_p[..., s] -= u_r[..., s] * _d_periodic(grid.r[..., s], 2 * pi / len(grid.phi), axis=1)
    T, P = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    e_r, e_t, e_p = spherical_frame(T, P)
    r = grid.r
    sin_t = np.sin(grid.theta)[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        g_t = np.where(r > 0, u_t / r, 0.0)
        g_p = np.where(r > 0, u_p / (r * sin_t), 0.0)
    return (u_r[..., None] * e_r[:, :, None, :] + g_t[..., None] * e_t[:, :, None, :]
            + g_p[..., None] * e_p[:, :, None, :])
