import numpy as np
import pytest
import scipy.sparse as sp

from vemvi.mesh import PolygonalMesh, generate_distorted_quad_mesh, generate_nonconvex_mesh, generate_voronoi_mesh


def triangulated_square(n, domain=(-1.0, -1.0, 1.0, 1.0)):
    """2*n*n right triangles on a uniform grid."""
    x0, y0, x1, y1 = domain
    xs, ys = np.linspace(x0, x1, n + 1), np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    m = n + 1
    cells = []
    for j in range(n):
        for i in range(n):
            v = j * m + i
            cells.append((v, v + 1, v + m + 1))
            cells.append((v, v + m + 1, v + m))
    bnd = (np.isclose(verts[:, 0], x0) | np.isclose(verts[:, 0], x1) | np.isclose(verts[:, 1], y0) | np.isclose(verts[:, 1], y1))
    return PolygonalMesh(vertices=verts, cells=tuple(cells), boundary=bnd, domain=domain)


def p1_local(coords):
    """Textbook linear finite element mass and stiffness on one triangle."""
    (x1, y1), (x2, y2), (x3, y3) = coords
    area = 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
    b = np.array([y2 - y3, y3 - y1, y1 - y2])
    c = np.array([x3 - x2, x1 - x3, x2 - x1])
    K = (np.outer(b, b) + np.outer(c, c)) / (4 * area)
    M = area / 12 * (np.ones((3, 3)) + np.eye(3))
    return M, K


def p1_global(mesh):
    n = mesh.n_vertices
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for cell in mesh.cells:
        m, k = p1_local(mesh.vertices[cell])
        M[np.ix_(cell, cell)] += m
        K[np.ix_(cell, cell)] += k
    return M, K


@pytest.fixture(scope="session")
def family_meshes():
    return {
        "distorted": generate_distorted_quad_mesh(8, 0.3, seed=1),
        "nonconvex": generate_nonconvex_mesh(6),
        "voronoi": generate_voronoi_mesh(120, 30, seed=4),
    }


def random_convex_polygon(rng, k=None):
    from scipy.spatial import ConvexHull

    k = k or int(rng.integers(3, 9))
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, k))
        radii = rng.uniform(0.5, 1.0, k)
        pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        pts = pts * rng.uniform(0.01, 2.0) + rng.uniform(-5, 5, 2)
        hull = ConvexHull(pts)
        if len(hull.vertices) >= 3:
            return pts[hull.vertices]


def polygon_mesh(coords):
    coords = np.asarray(coords, dtype=float)
    x0, y0 = coords.min(axis=0)
    x1, y1 = coords.max(axis=0)
    return PolygonalMesh(vertices=coords, cells=(tuple(range(len(coords))),), boundary=np.ones(len(coords), bool), domain=(x0, y0, x1, y1))


def dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


# criterion number -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.setdefault(number, []).append((bool(passed), detail))
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        checks = ACCEPTANCE_RESULTS[number]
        ok = all(p for p, _ in checks)
        details = "; ".join(d for _, d in checks)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({details})")
