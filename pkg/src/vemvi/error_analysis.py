"""Relative discrete error norms and log-log rate fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp


def interpolant_dofs(mesh, u: Callable, t: float) -> np.ndarray:
    """Nodal interpolant: dof_i = u(x_i, t)."""
    v = mesh.vertices
    return np.asarray(u(v[:, 0], v[:, 1], t), dtype=float) * np.ones(mesh.n_vertices)


@dataclass
class ErrorSeries:
    """Per-step relative errors in the discrete L2 (mass) and energy (stiffness) forms.

    Steps whose reference interpolant has a vanishing norm are flagged in
    ``skipped`` and contribute zero.
    """

    times: np.ndarray
    dt: float
    e0: np.ndarray
    e1: np.ndarray
    skipped: list = field(default_factory=list)

    @property
    def combined(self) -> float:
        return float(self.e0.max() + np.sqrt(self.dt * np.sum(self.e1 ** 2)))


def _relative(form: sp.spmatrix, err: np.ndarray, ref: np.ndarray) -> float | None:
    den = float(ref @ (form @ ref))
    if den <= 0.0:
        return None
    num = float(err @ (form @ err))
    return float(np.sqrt(max(num, 0.0) / den))


def error_norms(
    trajectory,
    mesh,
    M: sp.spmatrix,
    K: sp.spmatrix,
    exact: Callable,
    dt: float,
) -> ErrorSeries:
    times = np.asarray(trajectory.times, dtype=float)
    e0 = np.zeros(len(times))
    e1 = np.zeros(len(times))
    skipped = []
    for n, (t, U) in enumerate(zip(times, trajectory.dof_snapshots)):
        ref = interpolant_dofs(mesh, exact, t)
        err = U - ref
        a = _relative(M, err, ref)
        b = _relative(K, err, ref)
        if a is None or b is None:
            skipped.append(n)
            continue
        e0[n], e1[n] = a, b
    return ErrorSeries(times=times, dt=dt, e0=e0, e1=e1, skipped=skipped)


@dataclass
class ConvergenceTable:
    axis: str  # "space" or "time"
    sizes: list = field(default_factory=list)  # h or dt per level
    errors: list = field(default_factory=list)
    n_dofs: list = field(default_factory=list)
    e0_max: list = field(default_factory=list)
    e1_l2: list = field(default_factory=list)

    def add(self, size: float, error: float, n_dofs: int = 0, e0_max: float = float("nan"), e1_l2: float = float("nan")):
        self.sizes.append(float(size))
        self.errors.append(float(error))
        self.n_dofs.append(int(n_dofs))
        self.e0_max.append(float(e0_max))
        self.e1_l2.append(float(e1_l2))

    def fitted_slope(self, drop_coarsest: bool = False) -> float:
        sizes, errs = self.sizes, self.errors
        if drop_coarsest:
            sizes, errs = sizes[1:], errs[1:]
        return fit_rate(sizes, errs)

    def to_csv(self) -> str:
        lines = ["level,%s,n_dofs,error,e0_max,e1_l2" % ("h" if self.axis == "space" else "dt")]
        for i, row in enumerate(zip(self.sizes, self.n_dofs, self.errors, self.e0_max, self.e1_l2)):
            s, nd, e, a, b = row
            lines.append("%d,%.17g,%d,%.17g,%.17g,%.17g" % (i, s, nd, e, a, b))
        return "\n".join(lines) + "\n"


def fit_rate(sizes: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(size)."""
    s = np.asarray(sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    ok = (e > 0) & (s > 0)
    if not ok.all():
        warnings.warn(f"dropping {int((~ok).sum())} nonpositive entries from the rate fit")
    s, e = s[ok], e[ok]
    if len(s) < 3:
        raise ValueError("a rate fit needs at least 3 positive data points")
    slope, _ = np.polyfit(np.log(s), np.log(e), 1)
    return float(slope)
