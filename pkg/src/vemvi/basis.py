"""Scaled linear monomials and exact polygon quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DegenerateCellError, ElementGeometry

# Edge-midpoint rule: exact for degree 2 on triangles.  Barycentric points, weights sum to 1.
TRI_RULE_2 = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.full(3, 1.0 / 3.0),
)

_A1, _A2 = 0.445948490915964886, 0.091576213509770743
_W1, _W2 = 0.223381589678011466, 0.109951743655321868
# Strang-Fix / Dunavant 6-point rule: exact for degree 4.
TRI_RULE_4 = (
    np.array(
        [
            [_A1, _A1, 1 - 2 * _A1],
            [_A1, 1 - 2 * _A1, _A1],
            [1 - 2 * _A1, _A1, _A1],
            [_A2, _A2, 1 - 2 * _A2],
            [_A2, 1 - 2 * _A2, _A2],
            [1 - 2 * _A2, _A2, _A2],
        ]
    ),
    np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
)

TRIANGLE_RULES = {2: TRI_RULE_2, 4: TRI_RULE_4}


@dataclass(frozen=True)
class ScaledMonomialBasis:
    """m1 = 1, m2 = (x - xP)/hP, m3 = (y - yP)/hP."""

    centroid: np.ndarray
    h_scale: float

    def __post_init__(self):
        if not self.h_scale > 0:
            raise ValueError("h_scale must be positive")

    @classmethod
    def for_element(cls, geom: ElementGeometry) -> "ScaledMonomialBasis":
        return cls(centroid=np.asarray(geom.centroid, dtype=float), h_scale=geom.diameter)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values of (m1, m2, m3) at an (n, 2) array of points -> (n, 3)."""
        p = np.atleast_2d(points)
        s = (p - self.centroid) / self.h_scale
        return np.column_stack([np.ones(len(p)), s[:, 0], s[:, 1]])


def eval_monomial(basis: ScaledMonomialBasis, k: int, p) -> float:
    if k not in (1, 2, 3):
        raise ValueError(f"monomial index must be 1, 2 or 3, got {k}")
    return float(basis.evaluate(np.asarray(p, dtype=float))[0, k - 1])


def monomial_gradient(basis: ScaledMonomialBasis, k: int) -> tuple[float, float]:
    if k == 1:
        return (0.0, 0.0)
    if k == 2:
        return (1.0 / basis.h_scale, 0.0)
    if k == 3:
        return (0.0, 1.0 / basis.h_scale)
    raise ValueError(f"monomial index must be 1, 2 or 3, got {k}")


def fan_quadrature(coords: np.ndarray, apex: np.ndarray, degree: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points and weights on a polygon from a fan of triangles.

    Triangles (apex, v_i, v_{i+1}) carry their signed area, so the rule is
    exact for polynomials up to ``degree`` on any simple polygon, also when
    the apex does not see the whole boundary.
    """
    bary, w = TRIANGLE_RULES[degree]
    a = np.asarray(apex, dtype=float)
    b = coords
    c = np.roll(coords, -1, axis=0)
    areas = 0.5 * ((b[:, 0] - a[0]) * (c[:, 1] - a[1]) - (c[:, 0] - a[0]) * (b[:, 1] - a[1]))
    # (n_tri, n_pts, 2)
    pts = bary[None, :, 0:1] * a + bary[None, :, 1:2] * b[:, None, :] + bary[None, :, 2:3] * c[:, None, :]
    weights = areas[:, None] * w[None, :]
    return pts.reshape(-1, 2), weights.ravel()


def integrate_polynomial_over_polygon(
    coords: np.ndarray, basis: ScaledMonomialBasis, coefficients
) -> float:
    """Integral of a polynomial of total degree <= 2 in the scaled monomials.

    ``coefficients`` is either a length-3 vector (linear combination of
    m1, m2, m3) or a symmetric 3x3 matrix C meaning sum_ij C_ij m_i m_j.
    """
    c = np.asarray(coefficients, dtype=float)
    pts, w = fan_quadrature(coords, basis.centroid, degree=2)
    if abs(w.sum()) <= 0.0:
        raise DegenerateCellError("polygon has zero area")
    m = basis.evaluate(pts)
    if c.ndim == 1:
        return float(w @ (m @ c))
    return float(np.einsum("q,qi,ij,qj->", w, m, c, m))


def build_H(coords: np.ndarray, basis: ScaledMonomialBasis) -> np.ndarray:
    """H_ij = int_P m_i m_j."""
    pts, w = fan_quadrature(coords, basis.centroid, degree=2)
    m = basis.evaluate(pts)
    H = (m * w[:, None]).T @ m
    return 0.5 * (H + H.T)


def build_G(geom: ElementGeometry) -> np.ndarray:
    """G_ij = int_P grad m_i . grad m_j (constant gradients)."""
    g = geom.area / geom.diameter ** 2
    return np.diag([0.0, g, g])
