"""Run configuration: YAML in, normalized dict out.

Every section is optional; missing keys take the defaults below.  Errors
name the offending key as ``section.key``.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import numpy as np
import sympy as sym
import yaml

from .fields import BUILTIN_NAMES, PotentialPair, builtin_potential, coordinate_symbols, \
    lambdify_field, potential_from_expressions
from .geometry import Obstacle, make_obstacle

__all__ = [
    "COMMANDS",
    "DEFAULTS",
    "ConfigError",
    "load_config",
    "normalize_config",
    "dump_config",
    "config_hash",
    "build_obstacle",
    "build_potential",
    "build_source",
]

COMMANDS = ("check-identity", "check-estimate", "check-smallness", "solve", "scan", "selftest")

DEFAULTS: dict = {
    "command": "selftest",
    "seed": 0,
    "tolerance_scale": 1.0,
    "obstacle": {"shape": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0},
    "potential": {"name": "zero", "params": []},
    "multiplier": {"kind": "radial", "R": 2.0, "M": 1.0, "alpha": None, "profile": "quadratic"},
    "instance": {"k": 1.0, "epsilon": 0.1, "sign": 1, "from": "manufactured"},
    "field": {"kind": "outgoing_wave", "k": 1.0, "r_flat": 3.0, "r_zero": 7.0,
              "angular": "1 + x1/(4*r)"},
    "source": {"expr": "exp(-(r - 3)**2) * exp(I*k*r) * (1 + x1/(3*r))"},
    "grid": {"m_radial": 48, "angular_order": 16, "R_out": None},
    "estimate": {"theorem": "thm11", "t12_mode": "plain"},
    "solver": {"outer": "auto", "layer_width": None, "layer_strength": 1.0,
               "linear_solver": "sparse_direct", "tol": 1e-10, "max_iter": 400},
    "scan": {"k_list": [0.5, 1.0, 2.0, 4.0], "eps_list": [1e-1, 1e-2, 1e-3]},
    "tolerances": {"identity": 5e-3, "energy": 5e-3, "compact_boundary": 1e-12,
                   "smallness": None},
}

FIELD_KINDS = ("outgoing_wave", "shell_bump", "compact_bump", "gaussian", "expression")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(name, "unknown key")
        if isinstance(base[key], dict):
            if key in ("obstacle", "potential", "field", "source"):
                # free-form sections: replace wholesale
                if not isinstance(value, dict):
                    raise ConfigError(name, "expected a mapping")
                out[key] = copy.deepcopy(value)
                continue
            if not isinstance(value, dict):
                raise ConfigError(name, "expected a mapping")
            out[key] = _merge(base[key], value, name + ".")
        else:
            out[key] = value
    return out


def _number(cfg: dict, path: str, *, positive=False, nonneg=False, integer=False, allow_none=False):
    section, _, key = path.rpartition(".")
    holder = cfg[section] if section else cfg
    value = holder.get(key)
    if value is None and allow_none:
        return
    try:
        value = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {holder.get(key)!r}") from None
    if integer and float(holder[key]) != value:
        raise ConfigError(path, "expected an integer")
    if positive and not value > 0:
        raise ConfigError(path, "must be positive")
    if nonneg and value < 0:
        raise ConfigError(path, "must be nonnegative")
    holder[key] = value


def normalize_config(raw: dict | None, command: str | None = None) -> dict:
    """Merge ``raw`` over the defaults and validate every field."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    if command is not None:
        cfg["command"] = command
    if cfg["command"] not in COMMANDS:
        raise ConfigError("command", f"unknown command {cfg['command']!r}; choose from {COMMANDS}")
    _number(cfg, "seed", integer=True, nonneg=True)
    _number(cfg, "tolerance_scale", positive=True)
    for key in ("k", "epsilon"):
        _number(cfg, f"instance.{key}")
    _number(cfg, "instance.epsilon", nonneg=True)
    _number(cfg, "instance.sign", integer=True)
    if cfg["instance"]["sign"] not in (1, -1):
        raise ConfigError("instance.sign", "must be +1 or -1")
    if cfg["instance"]["from"] not in ("manufactured", "solved"):
        raise ConfigError("instance.from", "must be 'manufactured' or 'solved'")
    _number(cfg, "grid.m_radial", integer=True, positive=True)
    _number(cfg, "grid.angular_order", integer=True, positive=True)
    _number(cfg, "grid.R_out", positive=True, allow_none=True)
    mult = cfg["multiplier"]
    if mult["kind"] == "radial":
        for key in ("R", "M"):
            _number(cfg, f"multiplier.{key}", positive=True)
        _number(cfg, "multiplier.alpha", positive=True, allow_none=True)
    elif mult["kind"] == "smooth-test":
        if mult["profile"] not in ("quadratic", "linear"):
            raise ConfigError("multiplier.profile", "must be 'quadratic' or 'linear'")
    else:
        raise ConfigError("multiplier.kind", "must be 'radial' or 'smooth-test'")
    est = cfg["estimate"]
    if est["theorem"] not in ("thm11", "thm12", "thm12_highfreq"):
        raise ConfigError("estimate.theorem", f"unknown theorem {est['theorem']!r}")
    if est["t12_mode"] not in ("plain", "covariant"):
        raise ConfigError("estimate.t12_mode", "must be 'plain' or 'covariant'")
    sol = cfg["solver"]
    _number(cfg, "solver.tol", positive=True)
    _number(cfg, "solver.max_iter", integer=True, positive=True)
    _number(cfg, "solver.layer_strength", nonneg=True)
    _number(cfg, "solver.layer_width", positive=True, allow_none=True)
    if sol["outer"] not in ("auto", "radiation", "absorbing_layer"):
        raise ConfigError("solver.outer", f"unknown outer treatment {sol['outer']!r}")
    if sol["linear_solver"] not in ("sparse_direct", "iterative"):
        raise ConfigError("solver.linear_solver", f"unknown solver {sol['linear_solver']!r}")
    for key in ("k_list", "eps_list"):
        values = cfg["scan"][key]
        if not isinstance(values, list) or not values:
            raise ConfigError(f"scan.{key}", "expected a nonempty list")
        try:
            cfg["scan"][key] = [float(v) for v in values]
        except (TypeError, ValueError):
            raise ConfigError(f"scan.{key}", "entries must be numbers") from None
    if any(e < 0 for e in cfg["scan"]["eps_list"]):
        raise ConfigError("scan.eps_list", "epsilon values must be nonnegative")
    for key in ("identity", "energy", "compact_boundary"):
        _number(cfg, f"tolerances.{key}", positive=True)
    _number(cfg, "tolerances.smallness", positive=True, allow_none=True)
    kind = cfg["field"].get("kind")
    if kind not in FIELD_KINDS:
        raise ConfigError("field.kind", f"unknown field {kind!r}; choose from {FIELD_KINDS}")
    if "expr" not in cfg["source"]:
        raise ConfigError("source.expr", "missing source expression")
    # build the named objects once so that bad names fail at load time
    build_obstacle(cfg)
    build_potential(cfg)
    return cfg


def load_config(path: str | Path | None, command: str | None = None) -> dict:
    if path is None:
        return normalize_config({}, command)
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"YAML parse error: {exc}") from None
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return normalize_config(raw, command)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True)


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_obstacle(cfg: dict) -> Obstacle:
    try:
        return make_obstacle(dict(cfg["obstacle"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError("obstacle", str(exc)) from None


def build_potential(cfg: dict) -> PotentialPair:
    spec = cfg["potential"]
    n = len(cfg["obstacle"].get("center", [0, 0, 0]))
    if "name" in spec:
        if spec["name"] not in BUILTIN_NAMES:
            raise ConfigError("potential.name", f"unknown potential {spec['name']!r}")
        try:
            return builtin_potential(spec["name"], spec.get("params", []), n)
        except (ValueError, TypeError) as exc:
            raise ConfigError("potential.params", str(exc)) from None
    X = coordinate_symbols(n)
    names = {f"x{i + 1}": X[i] for i in range(n)}
    try:
        A = [sym.sympify(str(e), locals=names) for e in spec["A"]] if "A" in spec else None
        V = sym.sympify(str(spec.get("V", 0)), locals=names)
    except (sym.SympifyError, TypeError) as exc:
        raise ConfigError("potential", f"cannot parse expression: {exc}") from None
    free = set().union(*(e.free_symbols for e in (A or []) + [V])) - set(X)
    if free:
        raise ConfigError("potential", f"unknown symbols {sorted(map(str, free))}")
    try:
        return potential_from_expressions(A, V, n, name=spec.get("label", "custom"),
                                          singular_points=spec.get("singular_points", ()))
    except ValueError as exc:
        raise ConfigError("potential.A", str(exc)) from None


def build_source(cfg: dict, obstacle: Obstacle):
    """``f(points, k)`` from ``source.expr`` in ``x1..xn``, ``r = |x - center|``, ``k`` and ``I``."""
    n = obstacle.dim
    X = coordinate_symbols(n)
    k = sym.Symbol("k", real=True)
    r = sym.Symbol("r", positive=True)
    names = {f"x{i + 1}": X[i] for i in range(n)} | {"r": r, "k": k, "I": sym.I}
    try:
        expr = sym.sympify(str(cfg["source"]["expr"]), locals=names)
    except (sym.SympifyError, TypeError) as exc:
        raise ConfigError("source.expr", f"cannot parse expression: {exc}") from None
    free = expr.free_symbols - set(X) - {k, r}
    if free:
        raise ConfigError("source.expr", f"unknown symbols {sorted(map(str, free))}")
    rel = [X[i] - obstacle.center[i] for i in range(n)]
    expr = expr.subs(r, sym.sqrt(sum(c**2 for c in rel)))
    fn = lambdify_field(expr, list(X) + [k], complex)

    def source(points, kval):
        pts = np.asarray(points, dtype=float)
        kk = np.full(pts.shape[:-1] + (1,), float(kval))
        return np.asarray(fn(np.concatenate([pts, kk], axis=-1)), dtype=complex)

    return source
