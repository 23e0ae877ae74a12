"""Command-line driver: mesh generation, single runs and convergence studies.

Settings come from built-in defaults, then an optional key=value config
file (--config), then the VEMVI_OUTPUT_DIR environment variable (output
directory only), then command-line flags.  Exit codes: 0 success,
1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .error_analysis import ConvergenceTable
from .manufactured import SNAPSHOT_TIME, T_FINAL
from .mesh import MeshError, check_regularity, write_mesh
from .projectors import SingularElementError
from .stepper import ZERO_PROBLEM, NonConvergenceError, SolverConfig, SolverConfigError, write_snapshots
from .study import (
    COARSEST,
    FAMILIES,
    LLOYD_ITERATIONS,
    TIME_STUDY_RESOLUTION,
    RunConfig,
    make_mesh,
    refine,
    run_single,
    space_study,
    time_study,
)

log = logging.getLogger("vemvi")

ENV_OUTPUT_DIR = "VEMVI_OUTPUT_DIR"
DOF_WARNING = 50_000
STEP_WARNING = 5_000
REDUCED_PRESET = {"dt": 4e-3, "n_levels": 3}
PROBLEMS = ("oscillating-circle", "zero")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

ERRORS_HEADER = "step,t,e0,e1,skipped"

# key -> (type, default, help); None defaults are resolved per command
SETTINGS = {
    "mesh_family": (str, "distorted", f"one of {', '.join(FAMILIES)}"),
    "resolution": (int, None, "cells per side, or Voronoi seed count (default: family's coarsest level)"),
    "dt": (float, None, "time step (default 1e-3; 0.125 for convergence-time)"),
    "t_final": (float, T_FINAL, "final time"),
    "seed": (int, 0, "random seed for distorted and Voronoi meshes"),
    "lloyd_iterations": (int, LLOYD_ITERATIONS, "Lloyd iterations for Voronoi meshes"),
    "method": (str, "psor", "LCP solver: psor or projected_gradient"),
    "relaxation_omega": (float, 1.5, "PSOR relaxation factor in (0, 2)"),
    "beta": (float, None, "projected-gradient step (default 0.9/lambda_max)"),
    "tol": (float, 1e-10, "complementarity residual tolerance"),
    "max_iters": (int, None, "iteration cap per step (default 50 per free dof)"),
    "output_dir": (str, ".", f"output directory (env {ENV_OUTPUT_DIR} overrides the config file)"),
    "dump_snapshots": (bool, False, f"write the solution at t={SNAPSHOT_TIME} (run only)"),
    "problem": (str, "oscillating-circle", f"one of {', '.join(PROBLEMS)} (run only)"),
    "n_levels": (int, 4, "refinement levels of a study (>= 3)"),
}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(key: str, text: str):
    kind = SETTINGS[key][0]
    if text.strip().lower() == "none" and SETTINGS[key][1] is None:
        return None
    try:
        return _parse_bool(text) if kind is bool else kind(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def read_config(path) -> dict:
    """Parse a key=value file; '#' starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SETTINGS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve_settings(args: argparse.Namespace, command: str) -> dict:
    cfg = {k: v[1] for k, v in SETTINGS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    if os.environ.get(ENV_OUTPUT_DIR):
        cfg["output_dir"] = os.environ[ENV_OUTPUT_DIR]
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "preset", None) == "reduced":
        cfg.update(REDUCED_PRESET)
    if cfg["mesh_family"] not in FAMILIES:
        raise ConfigError(f"unknown mesh family {cfg['mesh_family']!r}; choose from {FAMILIES}")
    if cfg["problem"] not in PROBLEMS:
        raise ConfigError(f"unknown problem {cfg['problem']!r}; choose from {PROBLEMS}")
    if cfg["resolution"] is None:
        table = TIME_STUDY_RESOLUTION if command == "convergence-time" else COARSEST
        cfg["resolution"] = table[cfg["mesh_family"]]
    if cfg["dt"] is None:
        cfg["dt"] = 0.125 if command == "convergence-time" else 1e-3
    if command.startswith("convergence") and cfg["n_levels"] < 3:
        raise ConfigError("a convergence study needs n_levels >= 3")
    return cfg


def build_run_config(cfg: dict) -> RunConfig:
    solver_keys = {f.name for f in fields(SolverConfig)}
    solver = SolverConfig(**{k: cfg[k] for k in solver_keys})
    try:
        return RunConfig(
            mesh_family=cfg["mesh_family"],
            resolution=cfg["resolution"],
            dt=cfg["dt"],
            t_final=cfg["t_final"],
            solver=solver,
            seed=cfg["seed"],
            lloyd_iterations=cfg["lloyd_iterations"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _estimated_dofs(family: str, resolution: int) -> int:
    if family == "voronoi":
        return 2 * resolution
    if family == "nonconvex":
        return 2 * resolution * resolution
    return (resolution + 1) ** 2


def _warn_size(family: str, resolutions, n_steps) -> None:
    dofs = max(_estimated_dofs(family, r) for r in resolutions)
    steps = max(n_steps)
    if dofs > DOF_WARNING:
        log.warning("about %d dofs exceeds the desk-scale guide of %d", dofs, DOF_WARNING)
    if steps > STEP_WARNING:
        log.warning("%d time steps exceeds the desk-scale guide of %d", steps, STEP_WARNING)


def _output_dir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_mesh_gen(cfg: dict) -> int:
    out = _output_dir(cfg)
    mesh = make_mesh(cfg["mesh_family"], cfg["resolution"], cfg["seed"], cfg["lloyd_iterations"])
    stem = f"mesh_{cfg['mesh_family']}_{cfg['resolution']}"
    write_mesh(mesh, out / f"{stem}.txt")
    report = {"n_vertices": mesh.n_vertices, "n_cells": mesh.n_cells, "h": mesh.mesh_size, **check_regularity(mesh).as_dict()}
    (out / f"{stem}_regularity.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"{stem}: {mesh.n_cells} cells, {mesh.n_vertices} vertices, h = {mesh.mesh_size:.4f}")
    return EXIT_OK


def cmd_run(cfg: dict) -> int:
    config = build_run_config(cfg)
    n_steps = round(config.t_final / config.dt)
    _warn_size(config.mesh_family, [config.resolution], [n_steps])
    problem = ZERO_PROBLEM if cfg["problem"] == "zero" else None
    res = run_single(config, problem=problem)
    out = _output_dir(cfg)
    stem = f"run_{config.mesh_family}_{config.resolution}"
    skipped = set(res.errors.skipped)
    rows = [ERRORS_HEADER]
    for n, (t, a, b) in enumerate(zip(res.errors.times, res.errors.e0, res.errors.e1)):
        rows.append("%d,%.17g,%.17g,%.17g,%d" % (n, t, a, b, n in skipped))
    (out / f"{stem}_errors.csv").write_text("\n".join(rows) + "\n")
    if cfg["dump_snapshots"]:
        write_snapshots(res.trajectory, out / f"{stem}_snapshot.txt", times=[SNAPSHOT_TIME])
    if skipped:
        print(f"{len(skipped)} steps have a zero reference norm and were skipped")
    print(f"combined error = {res.errors.combined:.6e}  (h = {res.h:.4f}, dt = {config.dt:g})")
    return EXIT_OK


def _write_table(cfg: dict, table: ConvergenceTable, name: str) -> None:
    out = _output_dir(cfg)
    (out / name).write_text(table.to_csv())
    sys.stdout.write(table.to_csv())
    print(f"fitted slope = {table.fitted_slope():.4f}")


def cmd_convergence_space(cfg: dict) -> int:
    base = build_run_config(cfg)
    levels = cfg["n_levels"]
    res = [refine(base.mesh_family, base.resolution, k) for k in range(levels)]
    _warn_size(base.mesh_family, res, [round(base.t_final / base.dt)])
    table = space_study(base, levels)
    _write_table(cfg, table, f"convergence_space_{base.mesh_family}.csv")
    return EXIT_OK


def cmd_convergence_time(cfg: dict) -> int:
    base = build_run_config(cfg)
    levels = cfg["n_levels"]
    _warn_size(base.mesh_family, [base.resolution], [round(base.t_final / base.dt) * 2 ** (levels - 1)])
    table = time_study(base, levels)
    _write_table(cfg, table, f"convergence_time_{base.mesh_family}.csv")
    return EXIT_OK


COMMANDS = {
    "mesh-gen": cmd_mesh_gen,
    "run": cmd_run,
    "convergence-space": cmd_convergence_space,
    "convergence-time": cmd_convergence_time,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vemvi",
        description="Virtual element solver for parabolic obstacle problems on polygonal meshes.",
        epilog=f"Exit codes: {EXIT_OK} success, {EXIT_NUMERICAL} numerical failure, {EXIT_CONFIG} configuration error.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "mesh-gen": "write a mesh file and its regularity report",
        "run": "solve the benchmark and write per-step relative errors",
        "convergence-space": "refine the mesh at fixed dt and fit the error slope",
        "convergence-time": "halve dt on a fixed mesh and fit the error slope",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.add_argument("--config", help="key=value settings file", default=None)
        for key, (kind, default, desc) in SETTINGS.items():
            flag = "--" + key.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=f"{desc} (default {default})")
            elif key == "mesh_family":
                p.add_argument(flag, dest=key, choices=FAMILIES, default=None, help=f"{desc} (default {default})")
            else:
                p.add_argument(flag, dest=key, type=kind, default=None, help=f"{desc} (default {default})")
        if name == "convergence-space":
            p.add_argument("--preset", choices=["reduced"], default=None, help="reduced: dt=4e-3 and 3 levels")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_settings(args, args.command)
        return COMMANDS[args.command](cfg)
    except (ConfigError, SolverConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"solver failed at step {exc.step}: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MeshError, SingularElementError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
