"""Mesh families, single runs and space/time convergence studies."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

from .assembly import GlobalSystem, assemble_global
from .error_analysis import ConvergenceTable, ErrorSeries, error_norms
from .manufactured import T_FINAL, oscillating_circle
from .mesh import (
    PolygonalMesh,
    generate_distorted_quad_mesh,
    generate_nonconvex_mesh,
    generate_voronoi_mesh,
)
from .stepper import Problem, SolverConfig, TimeGrid, Trajectory, run

log = logging.getLogger(__name__)

FAMILIES = ("distorted", "nonconvex", "voronoi")

# Coarsest resolution per family (h ~ 0.38 / 0.30 / 0.21 on [-1, 1]^2).
# "Doubling" a family multiplies n_per_side by 2, or the Voronoi seed count by 4.
COARSEST = {"distorted": 8, "nonconvex": 10, "voronoi": 250}
# Fixed meshes of the time study (h ~ 0.048 / 0.074 / 0.026).
TIME_STUDY_RESOLUTION = {"distorted": 64, "nonconvex": 40, "voronoi": 16000}
DISTORTION = 0.3
LLOYD_ITERATIONS = 50


def refine(family: str, resolution: int, levels: int = 1) -> int:
    factor = 4 if family == "voronoi" else 2
    return resolution * factor ** levels


def make_mesh(family: str, resolution: int, seed: int = 0, lloyd_iterations: int = LLOYD_ITERATIONS) -> PolygonalMesh:
    if family == "distorted":
        return generate_distorted_quad_mesh(resolution, DISTORTION, seed=seed)
    if family == "nonconvex":
        return generate_nonconvex_mesh(resolution)
    if family == "voronoi":
        return generate_voronoi_mesh(resolution, lloyd_iterations, seed=seed)
    raise ValueError(f"unknown mesh family {family!r}; choose from {FAMILIES}")


@dataclass(frozen=True)
class RunConfig:
    mesh_family: str = "distorted"
    resolution: int = 8
    dt: float = 1e-3
    t_final: float = T_FINAL
    solver: SolverConfig = SolverConfig()
    seed: int = 0
    lloyd_iterations: int = LLOYD_ITERATIONS

    def __post_init__(self):
        if self.mesh_family not in FAMILIES:
            raise ValueError(f"unknown mesh family {self.mesh_family!r}; choose from {FAMILIES}")
        if self.resolution < 2 or not self.dt > 0 or not self.t_final > 0:
            raise ValueError("resolution >= 2, dt > 0 and t_final > 0 required")
        TimeGrid.from_dt(self.t_final, self.dt)


@dataclass
class RunResult:
    config: RunConfig
    mesh: PolygonalMesh
    trajectory: Trajectory
    errors: ErrorSeries
    seconds: float

    @property
    def h(self) -> float:
        return self.mesh.mesh_size


def run_single(
    config: RunConfig,
    problem: Problem | None = None,
    mesh: PolygonalMesh | None = None,
    system: GlobalSystem | None = None,
) -> RunResult:
    problem = problem if problem is not None else oscillating_circle()
    start = time.perf_counter()
    if system is not None:
        mesh = system.mesh
    if mesh is None:
        mesh = make_mesh(config.mesh_family, config.resolution, config.seed, config.lloyd_iterations)
    if system is None:
        system = assemble_global(mesh)
    grid = TimeGrid.from_dt(config.t_final, config.dt)
    traj = run(system, problem, grid, config.solver)
    exact = problem.exact if problem.exact is not None else (lambda x, y, t: problem.g(x, y, t))
    errs = error_norms(traj, mesh, system.mass, system.stiffness, exact, grid.dt)
    seconds = time.perf_counter() - start
    log.info(
        "%s res=%d h=%.4f dofs=%d dt=%g: error=%.4e (%.1fs)",
        config.mesh_family, config.resolution, mesh.mesh_size, mesh.n_vertices, config.dt, errs.combined, seconds,
    )
    return RunResult(config=config, mesh=mesh, trajectory=traj, errors=errs, seconds=seconds)


def _add(table: ConvergenceTable, size: float, res: RunResult) -> None:
    e = res.errors
    table.add(size, e.combined, res.mesh.n_vertices, float(e.e0.max()), float((e.dt * (e.e1 ** 2).sum()) ** 0.5))


def space_study(base: RunConfig, n_levels: int = 4) -> ConvergenceTable:
    """Refine the mesh n_levels - 1 times at fixed dt."""
    if n_levels < 3:
        raise ValueError("a convergence study needs n_levels >= 3")
    table = ConvergenceTable(axis="space")
    for k in range(n_levels):
        cfg = replace(base, resolution=refine(base.mesh_family, base.resolution, k))
        res = run_single(cfg)
        _add(table, res.h, res)
    return table


def time_study(base: RunConfig, n_levels: int = 4) -> ConvergenceTable:
    """Halve dt n_levels - 1 times on one fixed mesh."""
    if n_levels < 3:
        raise ValueError("a convergence study needs n_levels >= 3")
    table = ConvergenceTable(axis="time")
    mesh = make_mesh(base.mesh_family, base.resolution, base.seed, base.lloyd_iterations)
    system = assemble_global(mesh)
    for k in range(n_levels):
        cfg = replace(base, dt=base.dt / 2 ** k)
        res = run_single(cfg, system=system)
        _add(table, cfg.dt, res)
    return table
