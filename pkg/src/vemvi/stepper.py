"""Backward-Euler time stepping of the discrete obstacle problem.

Each step solves the symmetric linear complementarity problem

    x >= 0,   A x - b >= 0,   x . (A x - b) = 0

on the interior vertices, with A = M + dt K and
b = (M U^n)_free + dt load(t^{n+1}) - A_fb g(t^{n+1}).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np
import scipy.sparse as sp

from .assembly import GlobalSystem

log = logging.getLogger(__name__)

METHODS = ("psor", "projected_gradient")


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int, step: int | None = None):
        self.residual = residual
        self.iterations = iterations
        self.step = step
        super().__init__(message)


class SolverConfigError(ValueError):
    pass


class InvalidInitialDataError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    """Vectorised data fields f(x, y, t), g(x, y, t), u0(x, y)."""

    f: Callable
    g: Callable
    u0: Callable
    exact: Optional[Callable] = None
    name: str = "custom"


def zero_field(x, y, t=0.0):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


ZERO_PROBLEM = Problem(f=zero_field, g=zero_field, u0=zero_field, exact=zero_field, name="zero")


@dataclass(frozen=True)
class TimeGrid:
    t_final: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1 or not self.t_final > 0:
            raise ValueError("need t_final > 0 and n_steps >= 1")

    @classmethod
    def from_dt(cls, t_final: float, dt: float) -> "TimeGrid":
        n = round(t_final / dt)
        if n < 1 or not math.isclose(n * dt, t_final, rel_tol=1e-9):
            raise ValueError(f"dt={dt} does not divide t_final={t_final}")
        return cls(t_final, n)

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_steps + 1)


@dataclass(frozen=True)
class SolverConfig:
    method: str = "psor"
    relaxation_omega: float = 1.5
    beta: Optional[float] = None  # None: 0.9 / lambda_max(A) by power iteration
    tol: float = 1e-10
    max_iters: Optional[int] = None  # None: 50 * number of free dofs

    def __post_init__(self):
        if self.method not in METHODS:
            raise SolverConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.relaxation_omega < 2.0:
            raise SolverConfigError("relaxation_omega must lie in (0, 2)")
        if self.beta is not None and not self.beta > 0:
            raise SolverConfigError("beta must be positive")
        if not self.tol > 0:
            raise SolverConfigError("tol must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise SolverConfigError("max_iters must be positive")

    def iteration_cap(self, n: int) -> int:
        return self.max_iters if self.max_iters is not None else max(50 * n, 100)


@dataclass(frozen=True, eq=False)
class StepSystem:
    A: sp.csr_matrix
    rhs: np.ndarray
    lower_bound: float = 0.0

    @property
    def size(self) -> int:
        return len(self.rhs)


@dataclass(frozen=True)
class StepDiagnostics:
    iterations: int
    complementarity_residual: float
    energy_final: float
    min_dof_value: float


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    dof_snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.dof_snapshots) - 1


def energy(A: sp.spmatrix, rhs: np.ndarray, x: np.ndarray) -> float:
    """I(x) = x^T A x - 2 rhs^T x."""
    return float(x @ (A @ x) - 2.0 * rhs @ x)


def complementarity_residual(A: sp.spmatrix, rhs: np.ndarray, x: np.ndarray) -> float:
    if len(x) == 0:
        return 0.0
    return float(np.abs(np.minimum(x, A @ x - rhs)).max())


def _diagnostics(step: StepSystem, x: np.ndarray, iterations: int) -> StepDiagnostics:
    return StepDiagnostics(
        iterations=iterations,
        complementarity_residual=complementarity_residual(step.A, step.rhs, x),
        energy_final=energy(step.A, step.rhs, x),
        min_dof_value=float(x.min()) if len(x) else 0.0,
    )


@numba.njit(cache=True)
def _psor_kernel(indptr, indices, data, rhs, x, omega, tol, max_iters):
    n = len(rhs)
    diag = np.empty(n)
    for i in range(n):
        d = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                d = data[p]
        diag[i] = d
    res = np.inf
    for it in range(1, max_iters + 1):
        for i in range(n):
            r = rhs[i]
            for p in range(indptr[i], indptr[i + 1]):
                r -= data[p] * x[indices[p]]
            xi = x[i] + omega * r / diag[i]
            x[i] = xi if xi > 0.0 else 0.0
        res = 0.0
        for i in range(n):
            r = -rhs[i]
            for p in range(indptr[i], indptr[i + 1]):
                r += data[p] * x[indices[p]]
            m = abs(min(x[i], r))
            if m > res:
                res = m
        if res <= tol:
            return it, res
    return max_iters, res


def _check_system(step: StepSystem) -> None:
    diag = step.A.diagonal()
    if len(diag) and not np.all(diag > 0):
        raise SolverConfigError("step matrix needs a positive diagonal")


def solve_psor(step: StepSystem, x0: np.ndarray | None = None, config: SolverConfig = SolverConfig()):
    """Projected SOR: x_i <- max(0, x_i + omega (rhs_i - A_i x) / A_ii)."""
    _check_system(step)
    n = step.size
    A = sp.csr_matrix(step.A)
    x = np.zeros(n) if x0 is None else np.maximum(np.array(x0, dtype=float), 0.0)
    if n == 0:
        return x, _diagnostics(step, x, 0)
    cap = config.iteration_cap(n)
    it, res = _psor_kernel(
        A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data.astype(np.float64),
        np.ascontiguousarray(step.rhs, dtype=np.float64), x,
        float(config.relaxation_omega), float(config.tol), int(cap),
    )
    if res > config.tol:
        raise NonConvergenceError(f"PSOR did not converge in {it} sweeps (residual {res:.3e})", res, it)
    return x, _diagnostics(step, x, int(it))


def estimate_lambda_max(A: sp.spmatrix, iterations: int = 30, seed: int = 0) -> float:
    """Rayleigh quotient after a fixed number of power iterations."""
    v = np.random.default_rng(seed).uniform(0.5, 1.5, A.shape[0])
    lam = 0.0
    for _ in range(iterations):
        w = A @ v
        lam = float(v @ w) / float(v @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    return lam


def solve_projected_gradient(
    step: StepSystem,
    x0: np.ndarray | None = None,
    config: SolverConfig = SolverConfig(method="projected_gradient"),
    history: list | None = None,
):
    """Fixed-point iteration x <- max(0, x + beta (rhs - A x)).

    The projection onto the nonnegative cone is taken in dof coordinates,
    which has the same fixed points as the complementarity problem.  If
    ``history`` is a list, (energy, step length) pairs are appended per
    iteration.
    """
    _check_system(step)
    n = step.size
    A = sp.csr_matrix(step.A)
    x = np.zeros(n) if x0 is None else np.maximum(np.array(x0, dtype=float), 0.0)
    if n == 0:
        return x, _diagnostics(step, x, 0)
    lam = estimate_lambda_max(A)
    beta = config.beta if config.beta is not None else 0.9 / lam
    if not 0.0 < beta < 2.0 / lam:
        raise SolverConfigError(f"beta={beta:g} outside (0, 2/lambda_max) = (0, {2.0 / lam:g})")
    cap = config.iteration_cap(n)
    rhs = step.rhs
    res = np.inf
    for it in range(1, cap + 1):
        Ax = A @ x
        x_new = np.maximum(x + beta * (rhs - Ax), 0.0)
        if history is not None:
            history.append((energy(A, rhs, x_new), float(np.abs(x_new - x).max())))
        x = x_new
        res = complementarity_residual(A, rhs, x)
        if res <= config.tol:
            return x, _diagnostics(step, x, it)
    raise NonConvergenceError(f"projected gradient did not converge in {cap} iterations (residual {res:.3e})", res, cap)


def solve_lcp(step: StepSystem, x0=None, config: SolverConfig = SolverConfig()):
    if config.method == "psor":
        return solve_psor(step, x0, config)
    return solve_projected_gradient(step, x0, config)


def set_initial_condition(mesh, u0: Callable) -> np.ndarray:
    """Nodal interpolation U0_i = u0(x_i); rejects negative vertex values."""
    v = mesh.vertices
    U0 = np.asarray(u0(v[:, 0], v[:, 1]), dtype=float) * np.ones(mesh.n_vertices)
    if np.any(U0 < 0.0):
        bad = int(np.flatnonzero(U0 < 0.0)[0])
        raise InvalidInitialDataError(f"initial data negative at vertex {bad}: {U0[bad]!r}")
    return U0


class StepOperator:
    """A = M + dt K split into free/boundary blocks for a fixed dt."""

    def __init__(self, system: GlobalSystem, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.system = system
        self.dt = dt
        A = (system.mass + dt * system.stiffness).tocsr()
        f, b = system.free_dofs, system.boundary_dofs
        Af = A[f]
        self.A_ff = Af[:, f].tocsr()
        self.A_ff.sort_indices()
        self.A_fb = Af[:, b].tocsr()
        self.M_f = system.mass[f].tocsr()


def build_step_system(
    system: GlobalSystem,
    U_n: np.ndarray,
    problem: Problem,
    t_next: float,
    dt: float,
    operator: StepOperator | None = None,
) -> tuple[StepSystem, np.ndarray]:
    """Returns the LCP on free dofs and the boundary values at t_next."""
    op = operator if operator is not None else StepOperator(system, dt)
    verts = system.mesh.vertices[system.boundary_dofs]
    g_next = np.asarray(problem.g(verts[:, 0], verts[:, 1], t_next), dtype=float) * np.ones(len(verts))
    load = system.load(problem.f, t_next)
    rhs = op.M_f @ U_n + dt * load[system.free_dofs] - op.A_fb @ g_next
    return StepSystem(A=op.A_ff, rhs=rhs), g_next


def advance(
    trajectory: Trajectory,
    system: GlobalSystem,
    problem: Problem,
    dt: float,
    config: SolverConfig = SolverConfig(),
    operator: StepOperator | None = None,
    x0: np.ndarray | None = None,
) -> Trajectory:
    n = len(trajectory.dof_snapshots) - 1
    U_n = trajectory.dof_snapshots[-1]
    t_next = trajectory.times[-1] + dt
    step, g_next = build_step_system(system, U_n, problem, t_next, dt, operator)
    if x0 is None:
        x0 = np.maximum(U_n[system.free_dofs], 0.0)
    try:
        x, diag = solve_lcp(step, x0, config)
    except NonConvergenceError as exc:
        exc.step = n + 1
        raise
    U = np.empty(system.n_dofs)
    U[system.free_dofs] = x
    U[system.boundary_dofs] = g_next
    trajectory.times.append(t_next)
    trajectory.dof_snapshots.append(U)
    trajectory.diagnostics.append(diag)
    return trajectory


def run(
    system: GlobalSystem,
    problem: Problem,
    grid: TimeGrid,
    config: SolverConfig = SolverConfig(),
    callback: Callable | None = None,
) -> Trajectory:
    U0 = set_initial_condition(system.mesh, problem.u0)
    traj = Trajectory(times=[0.0], dof_snapshots=[U0], diagnostics=[])
    op = StepOperator(system, grid.dt)
    for n in range(grid.n_steps):
        advance(traj, system, problem, grid.dt, config, operator=op)
        # keep the time stamps exact multiples of dt
        traj.times[-1] = grid.times[n + 1]
        if callback is not None:
            callback(n + 1, traj)
    return traj


def linear_implicit_euler(system: GlobalSystem, problem: Problem, grid: TimeGrid) -> list:
    """Unconstrained backward Euler by sparse direct solves (oracle for tests)."""
    from scipy.sparse.linalg import splu

    op = StepOperator(system, grid.dt)
    lu = splu(op.A_ff.tocsc())
    U = set_initial_condition(system.mesh, problem.u0)
    out = [U]
    for n in range(grid.n_steps):
        step, g_next = build_step_system(system, out[-1], problem, grid.times[n + 1], grid.dt, op)
        V = np.empty_like(U)
        V[system.free_dofs] = lu.solve(step.rhs)
        V[system.boundary_dofs] = g_next
        out.append(V)
    return out


def write_snapshots(trajectory: Trajectory, path, times: list | None = None) -> None:
    """One line per stored step: 't v_0 v_1 ...' with 17 significant digits."""
    wanted = None if times is None else [float(t) for t in times]
    with open(path, "w") as fh:
        for t, U in zip(trajectory.times, trajectory.dof_snapshots):
            if wanted is not None and not any(math.isclose(t, w, abs_tol=1e-12) for w in wanted):
                continue
            fh.write("%.17g " % t + " ".join("%.17g" % v for v in U) + "\n")
