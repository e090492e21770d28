"""Radial multiplier family ``phi_R`` / ``varphi_R`` and its derived quantities.

All functions are of ``r = |x - y|``. Piecewise formulas use the inner branch for
``r <= R`` except for the Laplacian of ``phi_R``, which is discontinuous at ``R``
and returns the mean of its one-sided limits there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["MultiplierSet", "BiLaplacianParts", "multiplier_set", "bilaplacian_parts",
           "hessian_quadratic_form"]


@dataclass(frozen=True)
class BiLaplacianParts:
    """Distributional Laplacian of ``g = Laplacian(phi) + 2 varphi`` split into
    a point mass at ``y``, a single layer on ``|x - y| = R`` and an a.e. density
    ``-inner_coef/r^3`` (``r < R``), ``-outer_coef/r^3`` (``r > R``)."""

    n: int
    R: float
    point_mass: float
    sphere_delta_weight: float
    inner_coef: float = 0.0
    outer_coef: float = 0.0

    def regular_density(self, r):
        r = np.asarray(r, dtype=float)
        coef = np.where(r <= self.R, self.inner_coef, self.outer_coef)
        with np.errstate(divide="ignore"):
            return -coef / r**3


@dataclass(frozen=True)
class MultiplierSet:
    R: float
    M: float
    alpha: float
    n: int
    y: tuple = field(default=(0.0, 0.0, 0.0))

    @property
    def label(self) -> str:
        return f"phi_R(R={self.R:g},M={self.M:g},alpha={self.alpha:g})"

    @property
    def kinks(self) -> tuple[float, ...]:
        return (self.R,)

    @property
    def slope_limit(self) -> float:
        return self.M + 0.5 + self.alpha / (2 * self.n)

    def _r(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be nonnegative")
        return r

    def phi(self, r):
        r = self._r(r)
        n, R, M, a = self.n, self.R, self.M, self.alpha
        inner = M * r + (n - 1 + a) * r**2 / (4 * n * R)
        phi_R = M * R + (n - 1 + a) * R / (4 * n)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = (phi_R + self.slope_limit * (r - R)
                     - R / (2 * n * (n - 2)) * (1 - (R / r) ** (n - 2)))
        return np.where(r <= R, inner, outer)

    def dphi(self, r):
        r = self._r(r)
        n, R = self.n, self.R
        inner = self.M + (n - 1 + self.alpha) / (2 * n) * r / R
        with np.errstate(divide="ignore"):
            outer = self.slope_limit - (R / r) ** (n - 1) / (2 * n)
        return np.where(r <= R, inner, outer)

    def d2phi(self, r):
        r = self._r(r)
        n, R = self.n, self.R
        inner = np.full_like(r, (n - 1 + self.alpha) / (2 * n * R))
        with np.errstate(divide="ignore"):
            outer = (n - 1) / (2 * n) * R ** (n - 1) / r**n
        return np.where(r <= R, inner, outer)

    def _lap_branches(self, r):
        n, R, M, a = self.n, self.R, self.M, self.alpha
        with np.errstate(divide="ignore"):
            inner = (n - 1 + a) / (2 * R) + M * (n - 1) / r
            outer = (n - 1) * self.slope_limit / r
        return inner, outer

    def lap_phi(self, r):
        r = self._r(r)
        inner, outer = self._lap_branches(r)
        out = np.where(r < self.R, inner, outer)
        return np.where(r == self.R, 0.5 * (inner + outer), out)

    def varphi(self, r):
        r = self._r(r)
        return np.where(r < self.R, -self.alpha / (4 * self.n * self.R), 0.0)

    def combined(self, r):
        """``Laplacian(phi_R) + 2 varphi_R``, continuous in ``r``."""
        r = self._r(r)
        n, R, M = self.n, self.R, self.M
        with np.errstate(divide="ignore"):
            inner = (n - 1) / (2 * R) + M * (n - 1) / r + (n - 1) * self.alpha / (2 * n * R)
            outer = (n - 1) * self.slope_limit / r
        return np.where(r <= R, inner, outer)

    def dcombined(self, r):
        """Radial derivative of ``combined`` (one-sided inner value at ``R``)."""
        r = self._r(r)
        n = self.n
        with np.errstate(divide="ignore"):
            inner = -self.M * (n - 1) / r**2
            outer = -(n - 1) * self.slope_limit / r**2
        return np.where(r <= self.R, inner, outer)

    def lap_jump(self) -> float:
        """Left minus right limit of ``Laplacian(phi_R)`` at ``R``."""
        return self.alpha / (2 * self.n * self.R)

    def varphi_jump(self) -> float:
        """Left minus right limit of ``varphi_R`` at ``R``."""
        return -self.alpha / (4 * self.n * self.R)

    def parts(self) -> BiLaplacianParts:
        return bilaplacian_parts(self)


def multiplier_set(R: float = 1.0, M: float = 1.0, alpha: float | None = None, n: int = 3,
                   y=None) -> MultiplierSet:
    if n < 3:
        raise ValueError("dimension must be at least 3")
    alpha = float(n) if alpha is None else float(alpha)
    for name, value in (("R", R), ("M", M), ("alpha", alpha)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    y = tuple(float(c) for c in (np.zeros(n) if y is None else y))
    if len(y) != n:
        raise ValueError(f"base point needs {n} coordinates")
    return MultiplierSet(float(R), float(M), alpha, int(n), y)


def bilaplacian_parts(ms: MultiplierSet) -> BiLaplacianParts:
    n, R, M, a = ms.n, ms.R, ms.M, ms.alpha
    sphere = -(n - 1) * (n + a) / (2 * n * R**2)
    if n == 3:
        # the inner branch carries 2M/r and Laplacian(1/r) = -4 pi delta
        return BiLaplacianParts(n, R, -8 * np.pi * M, sphere)
    inner = M * (n - 1) * (n - 3)
    outer = (n - 1) * (n - 3) * (2 * n * M + n + a) / (2 * n)
    return BiLaplacianParts(n, R, 0.0, sphere, inner, outer)


def hessian_quadratic_form(ms, grad_radial, grad_tangential_norm, r):
    """``phi'' |radial|^2 + (phi'/r) |tangential|^2`` for a radial ``phi``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("the Hessian form needs r > 0")
    return (ms.d2phi(r) * np.abs(grad_radial) ** 2
            + ms.dphi(r) / r * np.asarray(grad_tangential_norm, dtype=float) ** 2)
