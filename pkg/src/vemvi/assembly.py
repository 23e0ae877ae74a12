"""Local and global virtual element matrices.

Local mass and stiffness use the stabilizers

    S_m(u, v) = |P| sum_z dof_z(u) dof_z(v),    S_a(u, v) = sum_z dof_z(u) dof_z(v)

applied to (I - D Pi) u, with Pi the oblique (mass) or elliptic
(stiffness) projector.  Global matrices are CSR with sorted indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .basis import ScaledMonomialBasis, build_G, build_H, fan_quadrature
from .mesh import ElementGeometry, PolygonalMesh
from .projectors import build_D, build_elliptic_projector, build_oblique_projector

STABILIZERS = ("dofi-dofi",)

Field = Callable[..., np.ndarray]


@dataclass(frozen=True)
class LocalOperators:
    cell_id: int
    vertex_ids: np.ndarray
    coords: np.ndarray
    geometry: ElementGeometry
    basis: ScaledMonomialBasis
    D: np.ndarray
    H: np.ndarray
    G: np.ndarray
    Pi_tilde: np.ndarray
    Pi_nabla: np.ndarray
    mass: np.ndarray
    stiffness: np.ndarray


def local_mass(area: float, H: np.ndarray, D: np.ndarray, Pi_tilde: np.ndarray) -> np.ndarray:
    R = np.eye(len(D)) - D @ Pi_tilde
    M = Pi_tilde.T @ H @ Pi_tilde + area * (R.T @ R)
    return 0.5 * (M + M.T)


def local_stiffness(G: np.ndarray, D: np.ndarray, Pi_nabla: np.ndarray) -> np.ndarray:
    R = np.eye(len(D)) - D @ Pi_nabla
    K = Pi_nabla.T @ G @ Pi_nabla + R.T @ R
    return 0.5 * (K + K.T)


def local_operators(mesh: PolygonalMesh, cell_id: int, stabilizer: str = "dofi-dofi") -> LocalOperators:
    if stabilizer not in STABILIZERS:
        raise ValueError(f"unknown stabilizer {stabilizer!r}; available: {STABILIZERS}")
    geom = mesh.geometry(cell_id)
    coords = mesh.cell_coords(cell_id)
    basis = ScaledMonomialBasis.for_element(geom)
    D = build_D(coords, basis)
    H = build_H(coords, basis)
    G = build_G(geom)
    Pt = build_oblique_projector(D)
    Pn = build_elliptic_projector(coords, D, G, geom.diameter)
    return LocalOperators(
        cell_id=cell_id,
        vertex_ids=mesh.cells[cell_id],
        coords=coords,
        geometry=geom,
        basis=basis,
        D=D,
        H=H,
        G=G,
        Pi_tilde=Pt,
        Pi_nabla=Pn,
        mass=local_mass(geom.area, H, D, Pt),
        stiffness=local_stiffness(G, D, Pn),
    )


def local_load(ops: LocalOperators, f: Field, t: float = 0.0, degree: int = 4) -> np.ndarray:
    """b_P = Pi_tilde^T (int_P m_i f)_i with a fan quadrature of the given degree."""
    pts, w = fan_quadrature(ops.coords, ops.basis.centroid, degree=degree)
    fv = np.asarray(f(pts[:, 0], pts[:, 1], t), dtype=float) * np.ones(len(pts))
    moments = ops.basis.evaluate(pts).T @ (w * fv)
    return ops.Pi_tilde.T @ moments


@dataclass(frozen=True, eq=False)
class LoadOperator:
    """Global load vector as a fixed linear map of f sampled at quadrature points.

    b = Q f(x_q, t) where Q[i, q] = w_q (Pi_tilde^T m(x_q))_i, summed over
    the cells that contain vertex i.
    """

    points: np.ndarray
    Q: sp.csr_matrix

    def __call__(self, f: Field, t: float) -> np.ndarray:
        fv = np.asarray(f(self.points[:, 0], self.points[:, 1], t), dtype=float)
        if fv.ndim == 0:
            fv = np.full(len(self.points), float(fv))
        return self.Q @ fv


@dataclass(frozen=True, eq=False)
class GlobalSystem:
    mesh: PolygonalMesh
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    load: LoadOperator
    free_dofs: np.ndarray
    boundary_dofs: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_vertices


def _scatter(blocks: Sequence[np.ndarray], dofs: Sequence[np.ndarray], n: int) -> sp.csr_matrix:
    rows = np.concatenate([np.repeat(d, len(d)) for d in dofs])
    cols = np.concatenate([np.tile(d, len(d)) for d in dofs])
    vals = np.concatenate([b.ravel() for b in blocks])
    # COO -> CSR sums duplicates in input order, so the result is deterministic
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_global(
    mesh: PolygonalMesh,
    local: Sequence[LocalOperators] | None = None,
    load_degree: int = 4,
) -> GlobalSystem:
    if local is None:
        local = [local_operators(mesh, c) for c in range(mesh.n_cells)]
    if len(local) != mesh.n_cells:
        raise ValueError("need one set of local operators per cell")
    n = mesh.n_vertices
    dofs = [op.vertex_ids for op in local]
    for d in dofs:
        if d.min() < 0 or d.max() >= n:
            raise IndexError("local dof index out of range")
    M = _scatter([op.mass for op in local], dofs, n)
    K = _scatter([op.stiffness for op in local], dofs, n)

    pts_all, rows, cols, vals = [], [], [], []
    offset = 0
    for op in local:
        pts, w = fan_quadrature(op.coords, op.basis.centroid, degree=load_degree)
        phi = op.basis.evaluate(pts) @ op.Pi_tilde  # (nq, N^P) projected basis values
        contrib = (phi * w[:, None]).T
        q_idx = offset + np.arange(len(pts))
        rows.append(np.repeat(op.vertex_ids, len(pts)))
        cols.append(np.tile(q_idx, len(op.vertex_ids)))
        vals.append(contrib.ravel())
        pts_all.append(pts)
        offset += len(pts)
    Q = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, offset)
    )
    Q.sum_duplicates()
    Q.sort_indices()
    return GlobalSystem(
        mesh=mesh,
        mass=M,
        stiffness=K,
        load=LoadOperator(points=np.vstack(pts_all), Q=Q),
        free_dofs=mesh.free_dofs,
        boundary_dofs=mesh.boundary_dofs,
    )


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """A restricted to free dofs, plus the lifting of pinned boundary values."""

    A_ff: sp.csr_matrix
    lifting: np.ndarray  # -A_fb g_b, to be added to the free-dof load
    boundary_values: np.ndarray


def apply_dirichlet(A: sp.spmatrix, system: GlobalSystem, g: Field | None, t: float) -> ReducedSystem:
    f, b = system.free_dofs, system.boundary_dofs
    A = sp.csr_matrix(A)
    verts = system.mesh.vertices[b]
    if g is None:
        gb = np.zeros(len(b))
    else:
        gb = np.asarray(g(verts[:, 0], verts[:, 1], t), dtype=float) * np.ones(len(b))
    A_ff = A[f][:, f].tocsr()
    A_ff.sort_indices()
    lifting = -(A[f][:, b] @ gb)
    return ReducedSystem(A_ff=A_ff, lifting=lifting, boundary_values=gb)


def dump_local_matrices(local: Sequence[LocalOperators], path) -> None:
    """Plain-text dump of local mass/stiffness for cross-implementation diffing."""
    with open(path, "w") as fh:
        for op in local:
            fh.write(f"cell {op.cell_id} vertices {' '.join(map(str, op.vertex_ids))}\n")
            for name, mat in (("mass", op.mass), ("stiffness", op.stiffness)):
                fh.write(f"{name}\n")
                for row in mat:
                    fh.write(" ".join("%.17g" % v for v in row) + "\n")
