"""Identity terms, estimate evaluators and sanity relations on grid fields.

Everything is evaluated about the grid's base point ``y``; ``r = |x - y|`` and
``x_hat = (x - y)/r``.  Boundary normals ``eta`` are outward for the
integration domain: into the obstacle on ``dE`` and along ``x_hat`` on the
truncation sphere ``|x - y| = R_out``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from math import pi

import numpy as np

from .fields import PotentialPair, magnetic_data
from .geometry import partition_boundary, star_shape_report
from .manufactured import ManufacturedField, apply_operator
from .multipliers import BiLaplacianParts
from .norms import dyadic_N, joint_morrey_sup, morrey_sup, shell_masses
from .quadrature import ShellGrid, build_shell_grid, discrete_gradient, integrate_volume

__all__ = [
    "SmoothMultiplier",
    "smooth_multiplier",
    "HelmholtzInstance",
    "TermBreakdown",
    "EstimateReport",
    "CheckResult",
    "SanityReport",
    "ZeroResonanceReport",
    "TERM_LABELS",
    "THEOREMS",
    "covariant_gradient",
    "radial_tangential_split",
    "manufacture_instance",
    "identity_breakdown",
    "estimate_report",
    "sanity_checks",
    "zero_resonance_diagnostic",
]

TERM_LABELS = {
    "T1": "hessian",
    "T2": "varphi_gradient",
    "T3": "bilaplacian",
    "T4": "potential",
    "T5": "magnetic_tangential",
    "T6": "varphi_frequency",
    "T7": "boundary_grad_combined",
    "T8": "boundary_frequency",
    "T9": "boundary_potential",
    "T10": "boundary_gradient_energy",
    "T11": "boundary_normal_combined",
    "T12": "boundary_normal_transport",
    "T13": "source",
    "T14": "absorption",
}

THEOREMS = ("thm11", "thm12", "thm12_highfreq")


@dataclass(frozen=True)
class SmoothMultiplier:
    """Classical test multipliers with ``varphi = 0``: ``phi = r^2/2`` or ``phi = r``."""

    kind: str
    n: int

    @property
    def label(self) -> str:
        return f"smooth({self.kind})"

    @property
    def kinks(self) -> tuple:
        return ()

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return r**2 / 2 if self.kind == "quadratic" else r

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        return r if self.kind == "quadratic" else np.ones_like(r)

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        return np.ones_like(r) if self.kind == "quadratic" else np.zeros_like(r)

    def lap_phi(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "quadratic":
            return np.full_like(r, float(self.n))
        return (self.n - 1) / r

    def varphi(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def combined(self, r):
        return self.lap_phi(r)

    def dcombined(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "quadratic":
            return np.zeros_like(r)
        return -(self.n - 1) / r**2

    def parts(self) -> BiLaplacianParts:
        n = self.n
        if self.kind == "quadratic":
            return BiLaplacianParts(n, np.inf, 0.0, 0.0)
        if n == 3:
            return BiLaplacianParts(n, np.inf, -8 * pi, 0.0)
        c = (n - 1) * (n - 3)
        return BiLaplacianParts(n, np.inf, 0.0, 0.0, c, c)


def smooth_multiplier(kind: str = "quadratic", n: int = 3) -> SmoothMultiplier:
    if kind not in ("quadratic", "linear"):
        raise ValueError(f"unknown smooth multiplier {kind!r}")
    return SmoothMultiplier(kind, n)


def covariant_gradient(u, A_values, grid: ShellGrid) -> np.ndarray:
    """``grad u - i A u`` with the grid's discrete gradient."""
    u = np.asarray(u)
    return discrete_gradient(u, grid) - 1j * np.asarray(A_values) * u[..., None]


def radial_tangential_split(grad, grid: ShellGrid) -> tuple[np.ndarray, np.ndarray]:
    """Radial component ``grad . x_hat`` and tangential norm about ``grid.y``."""
    grad = np.asarray(grad)
    if np.any(grid.r == 0):
        raise ValueError("radial direction undefined at the base point")
    xhat = np.broadcast_to(grid.dirs[:, :, None, :], grad.shape)
    radial = np.sum(grad * xhat, axis=-1)
    return radial, np.linalg.norm(grad - radial[..., None] * xhat, axis=-1)


@dataclass(frozen=True, eq=False)
class HelmholtzInstance:
    grid: ShellGrid
    potentials: PotentialPair
    k: float
    epsilon: float
    sign: int
    u: np.ndarray
    f: np.ndarray
    boundary_condition: str = "none"
    provenance: str = "manufactured"
    label: str = ""
    grad_u: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.boundary_condition not in ("dirichlet", "none"):
            raise ValueError(f"unknown boundary condition {self.boundary_condition!r}")
        if self.u.shape != self.grid.shape or self.f.shape != self.grid.shape:
            raise ValueError("u and f must live on the grid")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.f))):
            raise ValueError("u and f must be finite")
        if self.boundary_condition == "dirichlet" and self.grid.obstacle is not None:
            if self.trace_max > self.trace_tolerance:
                raise ValueError(f"Dirichlet trace {self.trace_max:.3g} exceeds tolerance")

    @property
    def trace_max(self) -> float:
        return float(np.max(np.abs(self.u[:, :, 0]))) if self.u.size else 0.0

    @property
    def trace_tolerance(self) -> float:
        return 1e-9 * max(1.0, float(np.max(np.abs(self.u))))

    @property
    def y(self) -> np.ndarray:
        return self.grid.y

    def scaled(self, lam: float) -> "HelmholtzInstance":
        g = None if self.grad_u is None else lam * self.grad_u
        return replace(self, u=lam * self.u, f=lam * self.f, grad_u=g)

    # -- cached kinematics --------------------------------------------------
    @cached_property
    def A(self) -> np.ndarray:
        return np.asarray(self.potentials.A(self.grid.points), dtype=float)

    @cached_property
    def V(self) -> np.ndarray:
        return np.asarray(self.potentials.V(self.grid.points), dtype=float)

    @cached_property
    def xhat(self) -> np.ndarray:
        return np.broadcast_to(self.grid.dirs[:, :, None, :], self.grid.points.shape)

    @cached_property
    def grad(self) -> np.ndarray:
        return self.grad_u if self.grad_u is not None else discrete_gradient(self.u, self.grid)

    @cached_property
    def cov(self) -> np.ndarray:
        return self.grad - 1j * self.A * self.u[..., None]

    @cached_property
    def split(self) -> tuple[np.ndarray, np.ndarray]:
        return radial_tangential_split(self.cov, self.grid)

    @cached_property
    def dr_V(self) -> np.ndarray:
        return np.sum(self.potentials.gradient_V(self.grid.points) * self.xhat, axis=-1)

    @cached_property
    def B_tau(self) -> np.ndarray:
        if self.potentials.a_is_zero:
            return np.zeros(self.grid.points.shape)
        return magnetic_data(self.potentials, self.grid.y, self.grid.points).B_tau

    def surfaces(self) -> list[dict]:
        """Boundary pieces of the integration domain with row data."""
        g = self.grid
        out = []
        if g.obstacle is not None:
            bs = g.boundary_sample()
            out.append(dict(name="inner", row=0, eta=bs.normals.reshape(g.shape[:2] + (g.n,)),
                            w=bs.weights.reshape(g.shape[:2])))
        rows = g.shape[2] - 1
        w_out = g.w_ang * g.R_out ** (g.n - 1)
        out.append(dict(name="outer", row=rows, eta=g.dirs, w=w_out))
        return out


def manufacture_instance(mf: ManufacturedField, obstacle, potentials: PotentialPair, k: float,
                         epsilon: float, sign: int = 1, *, grid: ShellGrid | None = None,
                         boundary_condition: str | None = None, y=None, R_out=None,
                         m_radial: int = 48, angular_order: int = 16, extra_breaks=(),
                         radial_only=None, gradient: str = "analytic",
                         label: str | None = None) -> HelmholtzInstance:
    """Instance with ``f = (Delta_A - V) u + (k^2 +- i eps) u`` from symbolic derivatives.

    ``gradient="analytic"`` keeps the symbolic gradient, so identity residuals
    measure quadrature error only; ``"discrete"`` uses the grid stencils.
    """
    if gradient not in ("analytic", "discrete"):
        raise ValueError("gradient must be 'analytic' or 'discrete'")
    if grid is None:
        grid = build_shell_grid(obstacle, y=y, R_out=R_out, m_radial=m_radial,
                                angular_order=angular_order, extra_breaks=extra_breaks,
                                radial_only=radial_only)
    x = grid.points
    if np.any(potentials.singular_distance(x) <= 1e-8):
        raise ValueError("potential is singular on the grid")
    u = np.asarray(mf.u(x), dtype=complex)
    if not np.all(np.isfinite(u)):
        raise ValueError("manufactured field is not evaluable on the grid")
    f = apply_operator(mf, potentials, k, epsilon, sign, x)
    if boundary_condition is None:
        tol = 1e-9 * max(1.0, float(np.max(np.abs(u))))
        on_bdry = np.max(np.abs(u[:, :, 0])) if grid.obstacle is not None else np.inf
        boundary_condition = "dirichlet" if on_bdry <= tol else "none"
    if boundary_condition == "dirichlet" and grid.obstacle is not None:
        u[:, :, 0] = 0.0
    grad_u = None
    if gradient == "analytic":
        grad_u = np.asarray(mf.grad(x), dtype=complex)
        if not np.all(np.isfinite(grad_u)):
            raise ValueError("manufactured gradient is not evaluable on the grid")
    return HelmholtzInstance(grid, potentials, float(k), float(epsilon), sign, u, f,
                             boundary_condition, "manufactured", label or mf.label, grad_u)


@dataclass(frozen=True)
class TermBreakdown:
    terms: dict
    residual: float
    scale: float
    t12_mode: str
    t12_plain: float
    t12_covariant: float
    outer: dict
    multiplier: str

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else 0.0

    @property
    def lhs(self) -> float:
        return sum(self.terms[f"T{i}"] for i in range(1, 13))

    @property
    def rhs(self) -> float:
        return self.terms["T13"] + self.terms["T14"]

    @property
    def boundary_max(self) -> float:
        return max(abs(self.terms[f"T{i}"]) for i in range(7, 13))

    def as_dict(self) -> dict:
        return {
            "terms": {k: {"label": TERM_LABELS[k], "value": v} for k, v in self.terms.items()},
            "residual": self.residual, "scale": self.scale, "relative_residual": self.relative,
            "t12_mode": self.t12_mode, "t12_plain": self.t12_plain,
            "t12_covariant": self.t12_covariant, "outer_boundary": self.outer,
            "multiplier": self.multiplier,
        }


def _check_kinks(ms, grid: ShellGrid):
    for R in ms.kinks:
        if R <= grid.r[..., 0].min():
            continue
        if R > grid.R_out * (1 + 1e-12):
            raise ValueError(f"multiplier radius {R} lies outside the grid (R_out={grid.R_out})")
        if not np.any(np.isclose(grid.breakpoints, R, rtol=1e-12, atol=0)) or (
                grid.mapped and R < grid.breakpoints[0] * (1 - 1e-12)):
            raise ValueError(f"multiplier radius {R} is not a grid breakpoint")


def identity_breakdown(inst: HelmholtzInstance, ms, t12_mode: str = "plain") -> TermBreakdown:
    """The fourteen identity terms for the multiplier ``ms``.

    ``t12_mode="plain"`` uses ``grad u . eta`` in T12, ``"covariant"`` uses
    ``grad_A u . eta``; both values are always reported.
    """
    if t12_mode not in ("plain", "covariant"):
        raise ValueError(f"unknown T12 mode {t12_mode!r}")
    g = inst.grid
    _check_kinks(ms, g)
    if inst.boundary_condition == "dirichlet" and inst.trace_max > inst.trace_tolerance:
        raise ValueError("Dirichlet flag with nonzero trace")
    r = g.r_eval
    w = g.weights
    u2 = np.abs(inst.u) ** 2
    cov = inst.cov
    cov2 = np.sum(np.abs(cov) ** 2, axis=-1)
    radial, tan = inst.split
    dphi, d2phi, varphi = ms.dphi(r), ms.d2phi(r), ms.varphi(r)
    k2 = inst.k**2
    T = {}
    T["T1"] = np.sum(w * (d2phi * np.abs(radial) ** 2 + dphi / r * tan**2))
    T["T2"] = np.sum(w * varphi * cov2)
    parts = ms.parts()
    bil = np.sum(w * parts.regular_density(r) * u2)
    if parts.sphere_delta_weight and g.r_first < parts.R <= g.R_out:
        bil += parts.sphere_delta_weight * np.real(g.sphere_integral(u2, parts.R))
    if parts.point_mass and g.obstacle is None and g.r_first == 0:
        bil += parts.point_mass * float(np.mean(u2[:, :, 0]))
    T["T3"] = -0.25 * bil
    T["T4"] = np.sum(w * (varphi * inst.V - 0.5 * dphi * inst.dr_V) * u2)
    bt = np.sum(inst.B_tau * np.conj(cov), axis=-1)
    T["T5"] = -np.imag(np.sum(w * dphi * inst.u * bt))
    T["T6"] = -k2 * np.sum(w * varphi * u2)

    bnd = {f"T{i}": 0.0 for i in range(7, 13)}
    outer = {}
    t12_cov = 0.0
    for s in inst.surfaces():
        j, eta, wb = s["row"], s["eta"], s["w"]
        rb = r[:, :, j]
        ub = inst.u[:, :, j]
        cb = cov[:, :, j]
        gb = inst.grad[:, :, j]
        xh = g.dirs
        cos = np.sum(xh * eta, axis=-1)
        dpb = ms.dphi(rb)
        ub2 = np.abs(ub) ** 2
        transport = dpb * np.sum(xh * np.conj(cb), axis=-1)
        vals = {
            "T7": 0.25 * np.sum(wb * ub2 * ms.dcombined(rb) * cos),
            "T8": -0.5 * k2 * np.sum(wb * ub2 * dpb * cos),
            "T9": 0.5 * np.sum(wb * ub2 * inst.V[:, :, j] * dpb * cos),
            "T10": 0.5 * np.sum(wb * np.sum(np.abs(cb) ** 2, axis=-1) * dpb * cos),
            "T11": -0.5 * np.real(np.sum(wb * np.sum(cb * eta, axis=-1) * np.conj(ub)
                                         * ms.combined(rb))),
        }
        plain = -np.real(np.sum(wb * np.sum(gb * eta, axis=-1) * transport))
        covariant = -np.real(np.sum(wb * np.sum(cb * eta, axis=-1) * transport))
        vals["T12"] = plain if t12_mode == "plain" else covariant
        t12_cov += covariant
        for key, val in vals.items():
            bnd[key] += float(val)
        if s["name"] == "outer":
            outer = {key: float(val) for key, val in vals.items()}
    T.update(bnd)

    conj_u = np.conj(inst.u)
    trans = np.sum(inst.xhat * np.conj(cov), axis=-1) * dphi
    T["T13"] = -np.real(np.sum(w * inst.f * (trans + 0.5 * ms.lap_phi(r) * conj_u
                                             + varphi * conj_u)))
    T["T14"] = -inst.sign * inst.epsilon * np.imag(np.sum(w * inst.u * trans))
    T = {key: float(val) for key, val in T.items()}
    lhs = sum(T[f"T{i}"] for i in range(1, 13))
    residual = abs(lhs - (T["T13"] + T["T14"]))
    scale = max(abs(v) for v in T.values())
    plain_value = T["T12"] if t12_mode == "plain" else _t12_plain(inst, ms)
    return TermBreakdown(T, residual, scale, t12_mode, float(plain_value), float(t12_cov), outer,
                         ms.label)


def _t12_plain(inst: HelmholtzInstance, ms) -> float:
    total = 0.0
    for s in inst.surfaces():
        j, eta, wb = s["row"], s["eta"], s["w"]
        rb = inst.grid.r_eval[:, :, j]
        transport = ms.dphi(rb) * np.sum(inst.grid.dirs * np.conj(inst.cov[:, :, j]), axis=-1)
        total += -np.real(np.sum(wb * np.sum(inst.grad[:, :, j] * eta, axis=-1) * transport))
    return float(total)


@dataclass(frozen=True)
class EstimateReport:
    theorem: str
    lhs: dict
    rhs: dict
    lhs_total: float
    rhs_total: float
    ratio: float
    degenerate: bool
    beta: float | None
    meta: dict

    def as_dict(self) -> dict:
        return {"theorem": self.theorem, "lhs": self.lhs, "rhs": self.rhs,
                "lhs_total": self.lhs_total, "rhs_total": self.rhs_total,
                "ratio": None if np.isnan(self.ratio) else self.ratio,
                "degenerate": self.degenerate, "beta": self.beta, "meta": self.meta}


def _restricted(inst: HelmholtzInstance, r_max: float | None) -> HelmholtzInstance:
    if r_max is None or r_max >= inst.grid.R_out:
        return inst
    sub = inst.grid.truncated(r_max)
    m = sub.shape[2]
    grad = inst.grad[:, :, :m]
    return HelmholtzInstance(sub, inst.potentials, inst.k, inst.epsilon, inst.sign,
                             inst.u[:, :, :m], inst.f[:, :, :m], inst.boundary_condition,
                             inst.provenance, inst.label, grad, dict(inst.meta))


def estimate_report(inst: HelmholtzInstance, theorem: str = "thm11", y=None,
                    r_max: float | None = None) -> EstimateReport:
    """Itemized sides of the a priori estimates with unit constants.

    ``r_max`` restricts all quadratures to ``|x - y| <= r_max`` (e.g. to drop an
    absorbing layer); it must be a grid breakpoint.
    """
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")
    if y is not None and not np.allclose(y, inst.grid.y, atol=1e-12):
        raise ValueError("estimates are evaluated about the grid base point")
    if inst.k == 0:
        raise ValueError("estimates need k != 0")
    inst = _restricted(inst, r_max)
    g = inst.grid
    n = g.n
    r = g.r
    w = g.weights
    u2 = np.abs(inst.u) ** 2
    cov2 = np.sum(np.abs(inst.cov) ** 2, axis=-1)
    _, tan = inst.split
    V_minus = np.maximum(-inst.V, 0.0)
    drV_minus = np.maximum(-inst.dr_V, 0.0)
    k2 = inst.k**2
    morrey, R_star = joint_morrey_sup(cov2 + k2 * u2, u2, g)
    lhs = {
        "tangential_gradient": float(np.sum(w * tan**2 / r)),
        "morrey_energy": morrey,
        "weighted_l2": float((n - 3) * np.sum(w * u2 / r**3)),
        "V_minus_morrey": morrey_sup(V_minus * u2, g, "ball"),
        "drV_minus": float(np.sum(w * drV_minus * u2)),
    }
    nf = dyadic_N(inst.f, g)
    v_inf = float(V_minus.max()) if V_minus.size else 0.0
    rhs = {
        "N_f_squared": nf**2,
        "low_frequency": (abs(inst.epsilon) + k2 + v_inf) * (nf / abs(inst.k)) ** 2,
    }
    beta = None
    if g.obstacle is not None:
        bs = g.boundary_sample()
        shape = g.shape[:2]
        eta = bs.normals.reshape(shape + (n,))
        wb = bs.weights.reshape(shape)
        cb = inst.cov[:, :, 0]
        gb = inst.grad[:, :, 0]
        ub2 = u2[:, :, 0]
        normal2 = np.abs(np.sum(cb * eta, axis=-1)) ** 2
        tang2 = np.maximum(np.sum(np.abs(cb) ** 2, axis=-1) - normal2, 0.0)
        if theorem == "thm11":
            part = partition_boundary(g.obstacle, g.y, bs)
            cos = part.cosines.reshape(shape)
            minus = part.minus_patch.reshape(shape)
            lhs["boundary_minus_flux"] = float(np.sum((wb * normal2 * -cos)[minus]))
            rhs["boundary_plus_flux"] = float(np.sum((wb * normal2 * cos)[~minus]))
        else:
            beta = star_shape_report(g.obstacle, g.y, bs).beta
            if beta <= 0:
                raise ValueError(f"obstacle is not star-shaped about y (beta={beta:.3g})")
            factor = 1.0 / beta + 1.0
            if theorem == "thm12":
                lhs["boundary_normal"] = float(beta * np.sum(wb * normal2))
                rhs["boundary_trace"] = float(factor * np.sum(wb * ub2))
                rhs["boundary_tangential"] = float(factor * np.sum(wb * tang2))
            else:
                pn2 = np.abs(np.sum(gb * eta, axis=-1)) ** 2
                pt2 = np.maximum(np.sum(np.abs(gb) ** 2, axis=-1) - pn2, 0.0)
                lhs["boundary_normal"] = float(beta * np.sum(wb * pn2))
                lhs["boundary_trace"] = float(beta * k2 * np.sum(wb * ub2))
                rhs["boundary_tangential"] = float(factor * np.sum(wb * pt2))
    lt = float(sum(lhs.values()))
    rt = float(sum(rhs.values()))
    if lt == 0 and rt == 0:
        ratio, degenerate = float("nan"), True
    else:
        ratio, degenerate = (lt / rt if rt > 0 else float("inf")), False
    meta = {"R_star": R_star, "V_minus_sup_nodes": int(V_minus.size), "truncation": g.R_out,
            "grid": g.metadata(), "constants": "C = 1"}
    return EstimateReport(theorem, lhs, rhs, lt, rt, ratio, degenerate, beta, meta)


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class SanityReport:
    epsilon_inequality: CheckResult
    energy_identity: CheckResult
    hardy: CheckResult

    @property
    def all_hold(self) -> bool:
        return self.epsilon_inequality.holds and self.energy_identity.holds and self.hardy.holds

    def as_dict(self) -> dict:
        return {name: {"lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}
                for name, c in (("epsilon_inequality", self.epsilon_inequality),
                                ("energy_identity", self.energy_identity), ("hardy", self.hardy))}


def sanity_checks(inst: HelmholtzInstance, energy_tol: float = 5e-3) -> SanityReport:
    """Absorption inequality, real-part energy identity and magnetic Hardy inequality.

    The energy identity includes the flux ``Re int (grad_A u . eta) conj(u)``
    over the domain boundary, which vanishes for Dirichlet or compactly
    supported fields.  Its ``lhs`` is the residual and ``rhs`` the term scale.
    """
    g = inst.grid
    w = g.weights
    u2 = np.abs(inst.u) ** 2
    mass = float(np.sum(w * u2))
    fu = float(np.sum(w * np.abs(inst.f * inst.u)))
    eps_lhs = abs(inst.epsilon) * mass
    eps = CheckResult(eps_lhs, fu, bool(eps_lhs <= fu * (1 + 1e-9) + 1e-300))

    cov2 = np.sum(np.abs(inst.cov) ** 2, axis=-1)
    flux = 0.0
    for s in inst.surfaces():
        j = s["row"]
        flux += np.real(np.sum(s["w"] * np.sum(inst.cov[:, :, j] * s["eta"], axis=-1)
                               * np.conj(inst.u[:, :, j])))
    pieces = [float(np.sum(w * cov2)), float(np.sum(w * inst.V * u2)), -inst.k**2 * mass,
              float(np.real(np.sum(w * inst.f * np.conj(inst.u)))), -float(flux)]
    res = abs(sum(pieces))
    scale = max(abs(p) for p in pieces)
    energy = CheckResult(res, scale, bool(res <= energy_tol * scale) if scale > 0 else True)

    n = g.n
    h_lhs = float(np.sum(w * u2 / g.r**2))
    h_rhs = (2.0 / (n - 2)) ** 2 * float(np.sum(w * cov2))
    hardy = CheckResult(h_lhs, h_rhs, bool(h_lhs < h_rhs) if h_rhs > 0 else h_lhs == 0)
    return SanityReport(eps, energy, hardy)


@dataclass(frozen=True)
class ZeroResonanceReport:
    sup_value: float
    liminf_proxy: float
    tail_radii: tuple
    tail_values: tuple
    shell_l2: dict
    trace_max: float
    classification: str
    reading: str = ("trace condition read as two requirements (zero trace on dE; u not in L^2); "
                    "the liminf condition is read on the tail integral over E outside B(R)")

    def as_dict(self) -> dict:
        return {"sup_value": self.sup_value, "liminf_proxy": self.liminf_proxy,
                "tail_radii": list(self.tail_radii), "tail_values": list(self.tail_values),
                "shell_l2": {str(k): v for k, v in self.shell_l2.items()},
                "trace_max": self.trace_max, "classification": self.classification,
                "reading": self.reading}


def zero_resonance_diagnostic(u, V_values, grid: ShellGrid, y=None,
                              trace_tol: float = 1e-9) -> ZeroResonanceReport:
    """Numerical look at the zero-resonance conditions; a report, not a proof."""
    if y is not None and not np.allclose(y, grid.y):
        raise ValueError("diagnostic is evaluated about the grid base point")
    u = np.asarray(u)
    u2 = np.abs(u) ** 2
    V = np.broadcast_to(np.asarray(V_values, dtype=float), grid.shape)
    weight = u2 * (V**2 + 1.0 / (1.0 + grid.r**2))
    radii = [R for R in grid.sup_radii() if R > 1]
    profile = [float(np.real(grid.ball_integral(weight, R))) for R in radii]
    total = float(np.real(integrate_volume(weight, grid)))
    sup_value = max(profile + [0.0])
    dyadic = [R for R in radii if abs(np.log2(R) - round(np.log2(R))) < 1e-12 and R < grid.R_out]
    tails = [max(total - float(np.real(grid.ball_integral(weight, R))), 0.0) for R in dyadic]
    shells = shell_masses(u, grid)
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    trace = float(np.max(np.abs(u[:, :, 0]))) if grid.obstacle is not None else 0.0
    if umax == 0:
        cls = "trivial"
    else:
        full = [shells[j] for j in sorted(shells) if 2.0 ** (j + 1) <= grid.R_out
                and 2.0**j >= grid.r[..., 0].max()]
        non_l2 = len(full) >= 2 and full[-1] >= 0.5 * full[-2] > 0
        cls = ("resonance_candidate" if non_l2 and trace <= trace_tol * max(umax, 1.0)
               else "not_candidate")
    return ZeroResonanceReport(sup_value, tails[-1] if tails else 0.0, tuple(dyadic), tuple(tails),
                               shells, trace, cls)
