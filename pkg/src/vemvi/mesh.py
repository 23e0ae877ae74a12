"""Polygonal meshes of axis-aligned rectangles.

A mesh is a list of vertex coordinates plus a list of counterclockwise
vertex-index cycles.  Three generator families are provided (distorted
quadrilaterals, a nonconvex chevron tiling and Lloyd-smoothed Voronoi
tessellations), together with a regularity checker and a line-oriented text
format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Voronoi

DEFAULT_DOMAIN = (-1.0, -1.0, 1.0, 1.0)
MESH_HEADER = "# vemvi polygonal mesh v1"


class MeshError(ValueError):
    """Raised for invalid mesh topology or geometry."""


class DegenerateCellError(MeshError):
    pass


class MeshFormatError(MeshError):
    """Raised by :func:`read_mesh` for malformed files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ElementGeometry:
    centroid: np.ndarray
    diameter: float
    area: float
    n_vertices: int


@dataclass(frozen=True)
class RegularityReport:
    min_edge_to_diameter_ratio: float
    star_shaped_estimate: float
    worst_cell_id: int
    worst_star_cell_id: int

    def as_dict(self) -> dict:
        return {
            "min_edge_to_diameter_ratio": self.min_edge_to_diameter_ratio,
            "star_shaped_estimate": self.star_shaped_estimate,
            "worst_cell_id": self.worst_cell_id,
            "worst_star_cell_id": self.worst_star_cell_id,
        }


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    vertices: np.ndarray
    cells: tuple
    boundary: np.ndarray
    domain: tuple = DEFAULT_DOMAIN
    _geometry: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        vertices.setflags(write=False)
        boundary = np.asarray(self.boundary, dtype=bool).copy()
        boundary.setflags(write=False)
        cells = []
        for c in self.cells:
            arr = np.array(c, dtype=np.int64)
            arr.setflags(write=False)
            cells.append(arr)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "cells", tuple(cells))
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_coords(self, cell_id: int) -> np.ndarray:
        return self.vertices[self.cells[cell_id]]

    def geometry(self, cell_id: int) -> ElementGeometry:
        if not self._geometry:
            self._geometry.extend(compute_element_geometry(self, i) for i in range(self.n_cells))
        return self._geometry[cell_id]

    @property
    def mesh_size(self) -> float:
        """h = max cell diameter."""
        return max(self.geometry(i).diameter for i in range(self.n_cells))

    @property
    def domain_area(self) -> float:
        x0, y0, x1, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    def same_as(self, other: "PolygonalMesh") -> bool:
        """Bit-exact structural equality."""
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.boundary, other.boundary)
            and len(self.cells) == len(other.cells)
            and all(np.array_equal(a, b) for a, b in zip(self.cells, other.cells))
        )


def polygon_area(coords: np.ndarray) -> float:
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(coords: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed area and centroid of a simple polygon (shoelace formula)."""
    # shift to the first vertex to limit cancellation on small cells far from the origin
    origin = coords[0]
    p = coords - origin
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, origin.copy()
    cx = ((p[:, 0] + q[:, 0]) * cross).sum() / (6.0 * area)
    cy = ((p[:, 1] + q[:, 1]) * cross).sum() / (6.0 * area)
    return float(area), origin + np.array([cx, cy])


def polygon_diameter(coords: np.ndarray) -> float:
    diff = coords[:, None, :] - coords[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def compute_element_geometry(mesh: PolygonalMesh, cell_id: int) -> ElementGeometry:
    if not 0 <= cell_id < mesh.n_cells:
        raise IndexError(f"cell id {cell_id} out of range")
    coords = mesh.cell_coords(cell_id)
    area, centroid = polygon_centroid(coords)
    diameter = polygon_diameter(coords)
    if not area > 1e-14 * max(diameter, 1e-300) ** 2:
        raise DegenerateCellError(f"cell {cell_id} has non-positive area {area:g}")
    centroid.setflags(write=False)
    return ElementGeometry(centroid=centroid, diameter=diameter, area=area, n_vertices=len(coords))


def is_convex(coords: np.ndarray, tol: float = 1e-12) -> bool:
    e = np.roll(coords, -1, axis=0) - coords
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    scale = np.linalg.norm(e, axis=1) * np.linalg.norm(en, axis=1)
    return bool(np.all(cross >= -tol * scale))


def is_simple(coords: np.ndarray) -> bool:
    """True if no two non-adjacent edges of the closed polyline intersect."""
    k = len(coords)
    a = coords
    b = np.roll(coords, -1, axis=0)
    i, j = np.triu_indices(k, 2)
    keep = ~((i == 0) & (j == k - 1))
    i, j = i[keep], j[keep]
    if len(i) == 0:
        return True

    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

    d1 = orient(a[i], b[i], a[j])
    d2 = orient(a[i], b[i], b[j])
    d3 = orient(a[j], b[j], a[i])
    d4 = orient(a[j], b[j], b[i])
    crossing = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    return not bool(crossing.any())


def _on_domain_boundary(points: np.ndarray, domain, tol: float) -> np.ndarray:
    x0, y0, x1, y1 = domain
    x, y = points[:, 0], points[:, 1]
    return (np.abs(x - x0) < tol) | (np.abs(x - x1) < tol) | (np.abs(y - y0) < tol) | (np.abs(y - y1) < tol)


def validate_mesh(mesh: PolygonalMesh, check_simple: bool = True) -> None:
    """Raise :class:`MeshError` if a mesh invariant is violated."""
    nv = mesh.n_vertices
    if nv == 0 or mesh.n_cells == 0:
        raise MeshError("empty mesh")
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshError("non-finite vertex coordinates")
    if len(mesh.boundary) != nv:
        raise MeshError("boundary flag count does not match vertex count")
    directed: dict[tuple[int, int], int] = {}
    total = 0.0
    for cid, cell in enumerate(mesh.cells):
        if len(cell) < 3:
            raise MeshError(f"cell {cid} has fewer than 3 vertices")
        if cell.min() < 0 or cell.max() >= nv:
            raise MeshError(f"cell {cid} references a vertex outside 0..{nv - 1}")
        if len(set(cell.tolist())) != len(cell):
            raise MeshError(f"cell {cid} repeats a vertex")
        coords = mesh.vertices[cell]
        area = polygon_area(coords)
        if area <= 0.0:
            raise DegenerateCellError(f"cell {cid} has non-positive signed area {area:g}")
        if check_simple and len(cell) > 3 and not is_simple(coords):
            raise MeshError(f"cell {cid} is self-intersecting")
        total += area
        for a, b in zip(cell.tolist(), np.roll(cell, -1).tolist()):
            if (a, b) in directed:
                raise MeshError(f"edge ({a},{b}) appears twice with the same orientation")
            directed[(a, b)] = cid
    rel = abs(total - mesh.domain_area) / mesh.domain_area
    if rel > 1e-10:
        raise MeshError(f"cell areas sum to {total!r}, domain area {mesh.domain_area!r}")
    scale = max(mesh.domain[2] - mesh.domain[0], mesh.domain[3] - mesh.domain[1])
    on_bdry = _on_domain_boundary(mesh.vertices, mesh.domain, 1e-12 * scale)
    if not np.array_equal(on_bdry, mesh.boundary):
        raise MeshError("boundary flags disagree with vertex positions")
    for (a, b) in directed:
        if (b, a) not in directed:
            if not (mesh.boundary[a] and mesh.boundary[b]):
                raise MeshError(f"edge ({a},{b}) has no twin and is not on the boundary")
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            if not _on_domain_boundary(mid[None, :], mesh.domain, 1e-12 * scale)[0]:
                raise MeshError(f"unpaired edge ({a},{b}) cuts through the domain interior")


def _finalize(vertices, cells, domain, check_simple=True) -> PolygonalMesh:
    vertices = np.asarray(vertices, dtype=float)
    scale = max(domain[2] - domain[0], domain[3] - domain[1])
    boundary = _on_domain_boundary(vertices, domain, 1e-12 * scale)
    mesh = PolygonalMesh(vertices=vertices, cells=tuple(cells), boundary=boundary, domain=domain)
    validate_mesh(mesh, check_simple=check_simple)
    return mesh


def _grid_lines(n: int, domain) -> tuple[np.ndarray, np.ndarray]:
    x0, y0, x1, y1 = domain
    return np.linspace(x0, x1, n + 1), np.linspace(y0, y1, n + 1)


def generate_distorted_quad_mesh(
    n_per_side: int,
    distortion: float = 0.3,
    seed: int = 0,
    domain: Sequence[float] = DEFAULT_DOMAIN,
    max_retries: int = 20,
) -> PolygonalMesh:
    """Uniform n-by-n quadrilateral grid with randomly displaced interior vertices.

    Each interior vertex moves by a vector drawn uniformly from the disk of
    radius ``distortion * w / 4`` (``w`` the smaller cell width), so the
    displacement magnitude never exceeds ``distortion * w``.  Draws that
    invert a cell are rejected and redrawn.
    """
    if n_per_side < 2:
        raise ValueError("n_per_side must be >= 2")
    if not 0.0 <= distortion < 0.5:
        raise ValueError("distortion must lie in [0, 0.5)")
    domain = tuple(float(v) for v in domain)
    xs, ys = _grid_lines(n_per_side, domain)
    X, Y = np.meshgrid(xs, ys)
    base = np.column_stack([X.ravel(), Y.ravel()])
    m = n_per_side + 1
    cells = []
    for j in range(n_per_side):
        for i in range(n_per_side):
            v = j * m + i
            cells.append((v, v + 1, v + m + 1, v + m))
    w = min(xs[1] - xs[0], ys[1] - ys[0])
    interior = np.flatnonzero(~_on_domain_boundary(base, domain, 1e-12 * w))
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        vertices = base.copy()
        if distortion > 0.0 and len(interior):
            radius = 0.25 * distortion * w * np.sqrt(rng.uniform(size=len(interior)))
            angle = rng.uniform(0.0, 2.0 * np.pi, size=len(interior))
            vertices[interior, 0] += radius * np.cos(angle)
            vertices[interior, 1] += radius * np.sin(angle)
        if all(polygon_area(vertices[list(c)]) > 0.0 for c in cells):
            return _finalize(vertices, cells, domain, check_simple=False)
    raise MeshError(f"could not draw a valid distorted mesh in {max_retries} attempts")


def generate_nonconvex_mesh(
    n_per_side: int,
    shift: float = 0.4,
    domain: Sequence[float] = DEFAULT_DOMAIN,
) -> PolygonalMesh:
    """Chevron tiling of an n-by-n grid.

    Every interior vertical grid edge gets a midpoint vertex pushed sideways
    by ``shift`` times the cell width: to the right in even rows and to the
    left in odd rows.  Each cell is then a hexagon (pentagon next to the
    left/right boundary) with one reflex vertex, except the cells whose only
    bent edge bulges outward; exactly ``n - 1`` cells per row are nonconvex.
    """
    if n_per_side < 2:
        raise ValueError("n_per_side must be >= 2")
    if not 0.0 < shift < 0.5:
        raise ValueError("shift must lie in (0, 0.5)")
    domain = tuple(float(v) for v in domain)
    n = n_per_side
    xs, ys = _grid_lines(n, domain)
    X, Y = np.meshgrid(xs, ys)
    vertices = [np.column_stack([X.ravel(), Y.ravel()])]
    m = n + 1
    w = xs[1] - xs[0]
    mid_index = {}
    mids = []
    for j in range(n):
        sign = 1.0 if j % 2 == 0 else -1.0
        ymid = 0.5 * (ys[j] + ys[j + 1])
        for i in range(1, n):
            mid_index[(i, j)] = m * m + len(mids)
            mids.append((xs[i] + sign * shift * w, ymid))
    if mids:
        vertices.append(np.array(mids))
    cells = []
    for j in range(n):
        for i in range(n):
            v = j * m + i
            cell = [v, v + 1]
            if i + 1 < n:
                cell.append(mid_index[(i + 1, j)])
            cell += [v + m + 1, v + m]
            if i > 0:
                cell.append(mid_index[(i, j)])
            cells.append(tuple(cell))
    return _finalize(np.vstack(vertices), cells, domain)


def _merge_close_vertices(points: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Cluster points closer than ``tol``; returns (unique points, old->new map)."""
    from scipy.spatial import cKDTree

    tree = cKDTree(points)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    parent = np.arange(len(points))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(len(points))])
    uniq, inverse = np.unique(roots, return_inverse=True)
    return points[uniq], inverse


def _reflected_voronoi(seeds: np.ndarray, domain, band: float | None = None):
    """Voronoi cells of ``seeds`` clipped to the box by mirroring seeds across its sides.

    With ``band`` set, only seeds closer than ``band`` to a side are
    mirrored across it (enough for the Lloyd loop, not for the final mesh).
    """
    x0, y0, x1, y1 = domain
    n = len(seeds)
    mirrored = [seeds]
    for axis, wall in ((0, x0), (0, x1), (1, y0), (1, y1)):
        r = seeds.copy()
        if band is not None:
            r = r[np.abs(r[:, axis] - wall) < band]
        r[:, axis] = 2.0 * wall - r[:, axis]
        mirrored.append(r)
    vor = Voronoi(np.vstack(mirrored), qhull_options="Qbb Qc Qz")
    regions = []
    for k in range(n):
        region = vor.regions[vor.point_region[k]]
        if -1 in region or len(region) < 3:
            raise MeshError("unbounded Voronoi region for an interior seed")
        regions.append(region)
    return vor.vertices, regions


def _region_centroids(verts: np.ndarray, regions) -> np.ndarray:
    """Vectorised shoelace centroids of raw (possibly repeated-vertex) regions."""
    sizes = np.fromiter((len(r) for r in regions), dtype=np.int64, count=len(regions))
    flat = np.fromiter((v for r in regions for v in r), dtype=np.int64, count=int(sizes.sum()))
    owner = np.repeat(np.arange(len(regions)), sizes)
    start = np.repeat(np.cumsum(sizes) - sizes, sizes)
    pos = np.arange(len(flat)) - start
    nxt = flat[start + (pos + 1) % np.repeat(sizes, sizes)]
    origin = verts[flat[start]]
    p = verts[flat] - origin
    q = verts[nxt] - origin
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = np.bincount(owner, cross) / 2.0
    cx = np.bincount(owner, (p[:, 0] + q[:, 0]) * cross) / (6.0 * area)
    cy = np.bincount(owner, (p[:, 1] + q[:, 1]) * cross) / (6.0 * area)
    return verts[flat[np.cumsum(sizes) - sizes]] + np.column_stack([cx, cy])


def _clean_voronoi(verts: np.ndarray, regions, domain):
    """Snap to the box, merge coincident vertices, orient cells counterclockwise."""
    x0, y0, x1, y1 = domain
    scale = max(x1 - x0, y1 - y0)
    used = sorted({v for r in regions for v in r})
    remap = {v: i for i, v in enumerate(used)}
    pts = verts[used].copy()
    snap = 1e-9 * scale
    for axis, wall in ((0, x0), (0, x1), (1, y0), (1, y1)):
        near = np.abs(pts[:, axis] - wall) < snap
        pts[near, axis] = wall
    pts, inverse = _merge_close_vertices(pts, 1e-10 * scale)
    cells = []
    for r in regions:
        cyc = [int(inverse[remap[v]]) for v in r]
        dedup = [v for i, v in enumerate(cyc) if v != cyc[i - 1]]
        if len(dedup) < 3:
            raise MeshError("Voronoi cell collapsed after vertex merging")
        if polygon_area(pts[dedup]) < 0:
            dedup.reverse()
        cells.append(dedup)
    return pts, cells


def generate_voronoi_mesh(
    n_seeds: int,
    lloyd_iterations: int = 50,
    seed: int = 0,
    domain: Sequence[float] = DEFAULT_DOMAIN,
    seeds: np.ndarray | None = None,
    max_retries: int = 5,
) -> PolygonalMesh:
    """Centroidal Voronoi tessellation of a box (PolyMesher-style Lloyd iteration).

    Seeds are drawn uniformly in the box (or passed explicitly through
    ``seeds``); each Lloyd step replaces every seed by the centroid of its
    clipped Voronoi cell.
    """
    if n_seeds < 4:
        raise ValueError("n_seeds must be >= 4")
    domain = tuple(float(v) for v in domain)
    x0, y0, x1, y1 = domain
    rng = np.random.default_rng(seed)
    if seeds is None:
        pts = np.column_stack([rng.uniform(x0, x1, n_seeds), rng.uniform(y0, y1, n_seeds)])
    else:
        pts = np.array(seeds, dtype=float)
        if pts.shape != (n_seeds, 2):
            raise ValueError("seeds must have shape (n_seeds, 2)")
    scale = max(x1 - x0, y1 - y0)
    for attempt in range(max_retries):
        try:
            band = 4.0 * np.sqrt((x1 - x0) * (y1 - y0) / n_seeds)
            for _ in range(lloyd_iterations):
                verts, regions = _reflected_voronoi(pts, domain, band)
                pts = _region_centroids(verts, regions)
            verts, regions = _reflected_voronoi(pts, domain)
            verts, cells = _clean_voronoi(verts, regions, domain)
            return _finalize(verts, cells, domain, check_simple=False)
        except Exception as exc:  # qhull errors or degenerate cells
            if attempt == max_retries - 1:
                raise MeshError(f"Voronoi generation failed: {exc}") from exc
            # duplicate or collinear seeds: jitter and retry
            pts = pts + rng.normal(scale=1e-6 * scale, size=pts.shape)
            pts[:, 0] = np.clip(pts[:, 0], x0 + 1e-9 * scale, x1 - 1e-9 * scale)
            pts[:, 1] = np.clip(pts[:, 1], y0 + 1e-9 * scale, y1 - 1e-9 * scale)
    raise AssertionError("unreachable")


def lloyd_residual(mesh: PolygonalMesh, seeds: np.ndarray) -> float:
    """max distance between each seed and the centroid of its cell."""
    cents = np.array([mesh.geometry(i).centroid for i in range(mesh.n_cells)])
    return float(np.linalg.norm(cents - seeds, axis=1).max())


def voronoi_seeds(mesh: PolygonalMesh) -> np.ndarray:
    """Recover generating points as cell centroids (valid after Lloyd convergence)."""
    return np.array([mesh.geometry(i).centroid for i in range(mesh.n_cells)])


def _kernel_inradius(coords: np.ndarray) -> float:
    """Radius of the largest disk inside the kernel of a simple CCW polygon.

    The kernel is the intersection of the inner half-planes of all edges,
    so the largest disk w.r.t. which the polygon is star-shaped is the
    Chebyshev disk of that intersection (one small LP).
    """
    e = np.roll(coords, -1, axis=0) - coords
    length = np.linalg.norm(e, axis=1)
    normal = np.column_stack([e[:, 1], -e[:, 0]]) / length[:, None]  # outward for CCW
    b = (normal * coords).sum(axis=1)
    A = np.column_stack([normal, np.ones(len(coords))])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=b, bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0:
        return 0.0
    return float(res.x[2])


def check_regularity(mesh: PolygonalMesh) -> RegularityReport:
    """Edge-to-diameter ratio and star-shapedness ratio, minimised over cells.

    The star-shapedness value is the radius of the largest disk contained
    in the cell kernel divided by the cell diameter.
    """
    min_edge, worst = np.inf, -1
    min_star, worst_star = np.inf, -1
    for cid in range(mesh.n_cells):
        coords = mesh.cell_coords(cid)
        h = mesh.geometry(cid).diameter
        edges = np.linalg.norm(np.roll(coords, -1, axis=0) - coords, axis=1)
        ratio = edges.min() / h
        if ratio < min_edge:
            min_edge, worst = ratio, cid
        star = _kernel_inradius(coords) / h
        if star < min_star:
            min_star, worst_star = star, cid
    return RegularityReport(
        min_edge_to_diameter_ratio=float(min_edge),
        star_shaped_estimate=float(min_star),
        worst_cell_id=int(worst),
        worst_star_cell_id=int(worst_star),
    )


def write_mesh(mesh: PolygonalMesh, path) -> None:
    lines = [MESH_HEADER, "domain " + " ".join("%.17g" % v for v in mesh.domain), str(mesh.n_vertices)]
    for (x, y), flag in zip(mesh.vertices, mesh.boundary):
        lines.append("%.17g %.17g %d" % (x, y, int(flag)))
    lines.append(str(mesh.n_cells))
    for cell in mesh.cells:
        lines.append(" ".join([str(len(cell))] + [str(int(v)) for v in cell]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> PolygonalMesh:
    text = Path(path).read_text()
    rows = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    rows = [(no, line) for no, line in rows if line and not line.startswith("#")]
    if not rows:
        raise MeshFormatError("empty mesh file", 1)
    it = iter(rows)

    def next_row(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshFormatError(f"unexpected end of file, expected {what}", len(text.splitlines()) + 1) from None

    domain = DEFAULT_DOMAIN
    no, line = next_row("vertex count")
    if line.startswith("domain"):
        parts = line.split()[1:]
        try:
            domain = tuple(float(p) for p in parts)
        except ValueError:
            raise MeshFormatError("bad domain line", no) from None
        if len(domain) != 4:
            raise MeshFormatError("domain needs 4 numbers", no)
        no, line = next_row("vertex count")
    try:
        nv = int(line)
    except ValueError:
        raise MeshFormatError(f"expected vertex count, got {line!r}", no) from None
    verts = np.empty((nv, 2))
    flags = np.empty(nv, dtype=bool)
    for k in range(nv):
        no, line = next_row("vertex line")
        parts = line.split()
        if len(parts) != 3:
            raise MeshFormatError("vertex line needs 'x y boundary_flag'", no)
        try:
            verts[k] = float(parts[0]), float(parts[1])
            flags[k] = bool(int(parts[2]))
        except ValueError:
            raise MeshFormatError(f"cannot parse vertex line {line!r}", no) from None
    no, line = next_row("cell count")
    try:
        nc = int(line)
    except ValueError:
        raise MeshFormatError(f"expected cell count, got {line!r}", no) from None
    cells = []
    for _ in range(nc):
        no, line = next_row("cell line")
        try:
            parts = [int(p) for p in line.split()]
        except ValueError:
            raise MeshFormatError(f"cannot parse cell line {line!r}", no) from None
        if not parts or parts[0] != len(parts) - 1:
            raise MeshFormatError("cell line vertex count does not match", no)
        for v in parts[1:]:
            if not 0 <= v < nv:
                raise MeshFormatError(f"dangling vertex index {v}", no)
        cells.append(tuple(parts[1:]))
    extra = next(it, None)
    if extra is not None:
        raise MeshFormatError("trailing content after cells", extra[0])
    return PolygonalMesh(vertices=verts, cells=tuple(cells), boundary=flags, domain=domain)
