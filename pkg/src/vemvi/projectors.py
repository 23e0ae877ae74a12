"""Element projectors onto linear polynomials.

All projectors are 3 x N^P matrices that map the vertex values of a local
virtual element function to its coefficients in the scaled monomial basis.
"""

from __future__ import annotations

import numpy as np

from .basis import ScaledMonomialBasis


class SingularElementError(ArithmeticError):
    """The element's vertices do not determine a linear polynomial."""


def build_D(coords: np.ndarray, basis: ScaledMonomialBasis) -> np.ndarray:
    """Row i holds (m1, m2, m3) evaluated at vertex i."""
    return basis.evaluate(coords)


def _solve3(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # LAPACK gesv: LU with partial pivoting
    if np.linalg.matrix_rank(A, tol=1e-13 * max(np.abs(A).max(), 1e-300)) < 3:
        raise SingularElementError("rank-deficient 3x3 projector system (collinear vertices?)")
    return np.linalg.solve(A, B)


def build_oblique_projector(D: np.ndarray, weight: float = 1.0) -> np.ndarray:
    """Least-squares fit of vertex values: (D^T D)^{-1} D^T.

    ``weight`` is the element area factor of the vertex inner product
    |P| sum_i v(x_i) w(x_i); it cancels and is exposed only so the
    cancellation can be checked.
    """
    DtD = weight * (D.T @ D)
    return _solve3(DtD, weight * D.T)


def boundary_integral_matrix(coords: np.ndarray, h_scale: float) -> np.ndarray:
    """Right-hand side B of the elliptic projection problem.

    Row 0: boundary mean of each nodal basis function (trapezoid rule per edge).
    Rows 1-2: int_dP phi_i dm_k/dn, k = 2, 3, also trapezoid-exact since the
    traces are piecewise linear and dm_k/dn is constant per edge.
    """
    nxt = np.roll(coords, -1, axis=0)
    edge = nxt - coords  # edge i goes from vertex i to vertex i+1
    length = np.linalg.norm(edge, axis=1)
    scaled_normal = np.column_stack([edge[:, 1], -edge[:, 0]])  # |e| * outward normal
    perimeter = length.sum()
    B = np.empty((3, len(coords)))
    B[0] = 0.5 * (length + np.roll(length, 1)) / perimeter
    B[1:] = (0.5 / h_scale) * (scaled_normal + np.roll(scaled_normal, 1, axis=0)).T
    return B


def build_elliptic_projector(coords: np.ndarray, D: np.ndarray, G: np.ndarray, h_scale: float) -> np.ndarray:
    """H1-seminorm projector with the constant fixed by the boundary mean."""
    B = boundary_integral_matrix(coords, h_scale)
    # Rows 2-3 of B @ D reproduce G exactly (divergence theorem); the first
    # row imposes the boundary-mean condition on the constant mode.
    Gt = B @ D
    Gt[1:] = G[1:]
    return _solve3(Gt, B)
