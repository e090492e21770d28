"""``morawetz-lab``: configuration-driven checks, solves and scans.

Each run writes ``report.json`` (full key-value tree with the config hash and
grid metadata), ``config.yaml`` (the normalized configuration) and one CSV
table.  The exit status is 0 iff every enabled check passes, 1 if a check
fails, 2 for configuration errors and 3 for runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .config import COMMANDS, ConfigError
from .manufactured import compact_bump, gaussian, manufactured_field, outgoing_wave, shell_bump
from .morawetz import (estimate_report, identity_breakdown, manufacture_instance, sanity_checks,
                       smooth_multiplier)
from .multipliers import multiplier_set
from .norms import smallness_report
from .quadrature import build_shell_grid
from .selftest import run_selftest
from .solver import SolverConfig, assemble_and_solve, limiting_absorption_scan

log = logging.getLogger("morawetz_lab")

COMPACT_FIELDS = ("shell_bump", "compact_bump")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(float(obj.real)), "im": _jsonable(float(obj.imag))}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]):
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# -- builders ---------------------------------------------------------------

def _grid(cfg: dict, obstacle, extra_breaks=()):
    g = cfg["grid"]
    return build_shell_grid(obstacle, R_out=g["R_out"], m_radial=g["m_radial"],
                            angular_order=g["angular_order"], extra_breaks=extra_breaks)


def _multiplier(cfg: dict, n: int):
    m = cfg["multiplier"]
    if m["kind"] == "smooth-test":
        return smooth_multiplier(m["profile"], n)
    return multiplier_set(m["R"], m["M"], m["alpha"], n)


def _field(cfg: dict, obstacle):
    spec = dict(cfg["field"])
    kind = spec.pop("kind")
    n = obstacle.dim
    try:
        if kind == "outgoing_wave":
            return outgoing_wave(spec.pop("k"), spec.pop("r_flat"), spec.pop("r_zero"),
                                 obstacle=obstacle, n=n, **spec)
        if kind == "shell_bump":
            return shell_bump(spec.pop("r_center"), spec.pop("width"), center=list(obstacle.center),
                              n=n, **spec)
        if kind == "compact_bump":
            return compact_bump(spec.pop("center"), spec.pop("width"), spec.pop("wavevector", None), n)
        if kind == "gaussian":
            return gaussian(spec.pop("center"), spec.pop("width"), n)
        return manufactured_field(spec.pop("expr"), n, "expression")
    except KeyError as exc:
        raise ConfigError(f"field.{exc.args[0]}", "missing key") from None
    except TypeError as exc:
        raise ConfigError("field", str(exc)) from None


def _solver_config(cfg: dict) -> SolverConfig:
    s, g = cfg["solver"], cfg["grid"]
    return SolverConfig(m_radial=g["m_radial"], angular_order=g["angular_order"], R_out=g["R_out"],
                        outer=s["outer"], layer_width=s["layer_width"],
                        layer_strength=s["layer_strength"], linear_solver=s["linear_solver"],
                        tol=s["tol"], max_iter=s["max_iter"])


def _instance(cfg: dict, obstacle, potential):
    inst = cfg["instance"]
    if inst["from"] == "solved":
        source = cfgmod.build_source(cfg, obstacle)
        res = assemble_and_solve(obstacle, potential, inst["k"], inst["epsilon"], inst["sign"],
                                 lambda x: source(x, inst["k"]), _solver_config(cfg))
        return res.instance, (res.layer["start"] if res.layer else None), res.as_dict()
    ms = _multiplier(cfg, obstacle.dim)
    breaks = tuple(R for R in getattr(ms, "kinks", ()) if math.isfinite(R))
    grid = _grid(cfg, obstacle, _usable_breaks(cfg, obstacle, breaks))
    mf = _field(cfg, obstacle)
    return (manufacture_instance(mf, obstacle, potential, inst["k"], inst["epsilon"], inst["sign"],
                                 grid=grid), None, {"field": mf.label})


def _usable_breaks(cfg, obstacle, breaks):
    R_out = cfg["grid"]["R_out"] or 8.0 * obstacle.outer_radius
    return tuple(R for R in breaks if obstacle.outer_radius < R < R_out)


# -- commands ---------------------------------------------------------------

def cmd_check_identity(cfg: dict, out: Path, jobs: int):
    obstacle = cfgmod.build_obstacle(cfg)
    potential = cfgmod.build_potential(cfg)
    inst, _, extra = _instance(dict(cfg, instance=dict(cfg["instance"], **{"from": "manufactured"})),
                               obstacle, potential)
    ms = _multiplier(cfg, obstacle.dim)
    tb = identity_breakdown(inst, ms, cfg["estimate"]["t12_mode"])
    scale = cfg["tolerance_scale"]
    checks = {"relative_residual": tb.relative <= cfg["tolerances"]["identity"] * scale}
    if cfg["field"]["kind"] in COMPACT_FIELDS:
        checks["compact_boundary_terms"] = (
            tb.boundary_max <= cfg["tolerances"]["compact_boundary"] * scale * tb.scale)
    rows = [[name, tb.as_dict()["terms"][name]["label"], complex(v).real, complex(v).imag]
            for name, v in tb.terms.items()]
    _write_csv(out / "terms.csv", ["term", "label", "real", "imag"], rows)
    return checks, {"identity": tb.as_dict(), "grid": inst.grid.metadata(), **extra}


def cmd_check_estimate(cfg: dict, out: Path, jobs: int):
    obstacle = cfgmod.build_obstacle(cfg)
    potential = cfgmod.build_potential(cfg)
    inst, r_max, extra = _instance(cfg, obstacle, potential)
    rep = estimate_report(inst, cfg["estimate"]["theorem"], r_max=r_max)
    san = sanity_checks(inst, cfg["tolerances"]["energy"] * cfg["tolerance_scale"])
    checks = {
        "lhs_nonnegative": all(v >= 0 for v in rep.lhs.values()),
        "ratio_defined": rep.degenerate or math.isfinite(rep.ratio),
        "epsilon_inequality": san.epsilon_inequality.holds,
        "hardy": san.hardy.holds,
    }
    if inst.provenance == "manufactured":
        checks["energy_identity"] = san.energy_identity.holds
    rows = [["lhs", k, v] for k, v in rep.lhs.items()] + [["rhs", k, v] for k, v in rep.rhs.items()]
    rows += [["total", "lhs", rep.lhs_total], ["total", "rhs", rep.rhs_total],
             ["total", "ratio", rep.ratio]]
    _write_csv(out / "components.csv", ["side", "component", "value"], rows)
    return checks, {"estimate": rep.as_dict(), "sanity": san.as_dict(), "instance": extra,
                    "layer_excluded_beyond": r_max}


def cmd_check_smallness(cfg: dict, out: Path, jobs: int):
    obstacle = cfgmod.build_obstacle(cfg)
    potential = cfgmod.build_potential(cfg)
    grid = _grid(cfg, obstacle)
    rep = smallness_report(potential, grid)
    checks = {"finite": all(math.isfinite(v) for v in (rep.C1, rep.C2, rep.C3))}
    thr = cfg["tolerances"]["smallness"]
    if thr is not None:
        checks["below_threshold"] = rep.delta_total <= thr * cfg["tolerance_scale"]
    _write_csv(out / "smallness.csv", ["component", "value"],
               [["C1", rep.C1], ["C2", rep.C2], ["C3", rep.C3], ["delta_total", rep.delta_total]])
    return checks, {"smallness": rep.as_dict(), "grid": grid.metadata()}


def cmd_solve(cfg: dict, out: Path, jobs: int):
    obstacle = cfgmod.build_obstacle(cfg)
    potential = cfgmod.build_potential(cfg)
    inst = cfg["instance"]
    source = cfgmod.build_source(cfg, obstacle)
    scfg = _solver_config(cfg)
    res = assemble_and_solve(obstacle, potential, inst["k"], inst["epsilon"], inst["sign"],
                             lambda x: source(x, inst["k"]), scfg)
    scale = cfg["tolerance_scale"]
    checks = {"linear_residual": res.linear_residual <= scfg.tol * scale,
              "energy_identity": res.energy["relative"] <= 10 * scfg.tol * scale,
              "epsilon_inequality": res.epsilon_check["holds"]}
    g = res.grid
    radii, first = np.unique(np.round(g.r[0, 0], 13), return_index=True)
    profile = np.sqrt(np.sum(g.w_ang[..., None] * np.abs(res.u[..., first]) ** 2, axis=(0, 1)))
    _write_csv(out / "radial_profile.csv", ["r", "sphere_l2"],
               [[r, p] for r, p in zip(radii, profile)])
    return checks, {"solve": res.as_dict()}


def cmd_scan(cfg: dict, out: Path, jobs: int):
    obstacle = cfgmod.build_obstacle(cfg)
    potential = cfgmod.build_potential(cfg)
    source = cfgmod.build_source(cfg, obstacle)
    scfg = _solver_config(cfg)
    reps = limiting_absorption_scan(obstacle, potential, cfg["scan"]["k_list"],
                                    cfg["scan"]["eps_list"], source, scfg,
                                    sign=cfg["instance"]["sign"], jobs=jobs, per_k=True)
    scale = cfg["tolerance_scale"]
    checks = {
        "ratios_defined": all(r.degenerate or math.isfinite(r.ratio) for r in reps),
        "epsilon_inequality": all(r.meta["epsilon_inequality"] for r in reps),
        "energy_identity": all(r.meta["energy_relative"] <= 10 * scfg.tol * scale for r in reps),
    }
    lhs_keys = list(reps[0].lhs)
    rhs_keys = list(reps[0].rhs)
    header = (["k", "epsilon"] + [f"lhs_{k}" for k in lhs_keys] + [f"rhs_{k}" for k in rhs_keys]
              + ["lhs_total", "rhs_total", "ratio", "solution_l2", "linear_residual",
                 "layer_excluded"])
    rows = [[r.meta["k"], r.meta["epsilon"]] + [r.lhs[k] for k in lhs_keys]
            + [r.rhs[k] for k in rhs_keys]
            + [r.lhs_total, r.rhs_total, r.ratio, r.meta["solution_l2"], r.meta["linear_residual"],
               r.meta["layer_excluded"]] for r in reps]
    _write_csv(out / "scan.csv", header, rows)
    ratios = [r.ratio for r in reps if math.isfinite(r.ratio)]
    summary = {"ratio_min": min(ratios) if ratios else None,
               "ratio_max": max(ratios) if ratios else None}
    return checks, {"scan": [r.as_dict() for r in reps], "summary": summary}


def cmd_selftest(cfg: dict, out: Path, jobs: int):
    results = run_selftest(cfg["seed"], cfg["tolerance_scale"])
    _write_csv(out / "selftest.csv", ["case", "passed", "value"],
               [[r.name, r.passed, r.value] for r in results])
    return {r.name: r.passed for r in results}, {"cases": [r.__dict__ for r in results]}


COMMAND_TABLE = {
    "check-identity": cmd_check_identity,
    "check-estimate": cmd_check_estimate,
    "check-smallness": cmd_check_smallness,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "selftest": cmd_selftest,
}


def _failing_module(exc: BaseException) -> str:
    module = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename)
        if path.parent.name == "morawetz_lab":
            module = path.stem
    return module


def run(cfg: dict, out: Path, jobs: int = 1) -> int:
    """Execute ``cfg["command"]`` and write the reports into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfgmod.dump_config(cfg), encoding="utf-8")
    report = {"command": cfg["command"], "config_hash": cfgmod.config_hash(cfg), "config": cfg,
              "seed": cfg["seed"], "tolerance_scale": cfg["tolerance_scale"],
              "version": __version__}
    try:
        checks, result = COMMAND_TABLE[cfg["command"]](cfg, out, jobs)
    except ConfigError:
        raise
    except Exception as exc:  # reported with the failing module, then exit 3
        report.update(status="error", error=str(exc), module=_failing_module(exc))
        _dump(out, report)
        log.error("%s failed in module %s: %s", cfg["command"], report["module"], exc)
        return 3
    passed = all(bool(v) for v in checks.values())
    report.update(status="pass" if passed else "fail", checks=checks, result=result)
    _dump(out, report)
    for name, ok in checks.items():
        log.info("%-36s %s", name, "PASS" if ok else "FAIL")
    return 0 if passed else 1


def _dump(out: Path, report: dict):
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False)
    (out / "report.json").write_text(text + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morawetz-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides the command named in the config")
    p.add_argument("--config", type=Path, help="YAML configuration file")
    p.add_argument("--out", type=Path, default=Path("morawetz_out"), help="report directory")
    p.add_argument("--seed", type=int, help="seed for randomized fixtures (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for scans")
    p.add_argument("--tolerance-scale", type=float, help="multiplies every tolerance")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = cfgmod.load_config(args.config, args.command)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.tolerance_scale is not None:
            overrides["tolerance_scale"] = args.tolerance_scale
        if overrides:
            cfg = cfgmod.normalize_config({**cfg, **overrides})
        status = run(cfg, args.out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{cfg['command']}: {['pass', 'fail', '', 'error'][status]} ({args.out / 'report.json'})")
    return status


if __name__ == "__main__":
    sys.exit(main())
