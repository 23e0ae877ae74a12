import numpy as np
import pytest

from vemvi.mesh import (
    DegenerateCellError,
    MeshError,
    MeshFormatError,
    PolygonalMesh,
    check_regularity,
    compute_element_geometry,
    generate_distorted_quad_mesh,
    generate_nonconvex_mesh,
    generate_voronoi_mesh,
    is_convex,
    is_simple,
    lloyd_residual,
    read_mesh,
    validate_mesh,
    write_mesh,
)


def single_cell(coords):
    coords = np.asarray(coords, dtype=float)
    x0, y0 = coords.min(axis=0)
    x1, y1 = coords.max(axis=0)
    return PolygonalMesh(
        vertices=coords,
        cells=(tuple(range(len(coords))),),
        boundary=np.ones(len(coords), dtype=bool),
        domain=(x0, y0, x1, y1),
    )


def convex_hexagon(rng):
    angles = np.sort(rng.uniform(0, 2 * np.pi, 6))
    radii = rng.uniform(0.8, 1.2, 6)
    pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)]) + rng.uniform(-3, 3, 2)
    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    return pts[hull.vertices]  # counterclockwise


ALL_FAMILIES = [
    ("distorted", lambda: generate_distorted_quad_mesh(6, 0.3, seed=3)),
    ("nonconvex", lambda: generate_nonconvex_mesh(4)),
    ("voronoi", lambda: generate_voronoi_mesh(60, 20, seed=5)),
]


def test_unit_square_geometry():
    g = compute_element_geometry(single_cell([(0, 0), (1, 0), (1, 1), (0, 1)]), 0)
    assert g.area == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(g.centroid, [0.5, 0.5], atol=1e-15)
    assert g.diameter == pytest.approx(np.sqrt(2), abs=1e-15)
    assert g.n_vertices == 4


def test_right_triangle_geometry():
    g = compute_element_geometry(single_cell([(0, 0), (1, 0), (0, 1)]), 0)
    assert g.area == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(g.centroid, [1 / 3, 1 / 3], atol=1e-15)
    assert g.diameter == pytest.approx(np.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_hexagon_geometry_matches_fan_oracle(seed):
    coords = convex_hexagon(np.random.default_rng(seed))
    g = compute_element_geometry(single_cell(coords), 0)
    # oracle: fan from vertex 0, sum triangle areas and first moments
    a = coords[0]
    area, moment = 0.0, np.zeros(2)
    for b, c in zip(coords[1:-1], coords[2:]):
        t = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        area += t
        moment += t * (a + b + c) / 3
    assert g.area == pytest.approx(area, rel=1e-12)
    np.testing.assert_allclose(g.centroid, moment / area, rtol=0, atol=1e-12)
    d = max(np.linalg.norm(p - q) for p in coords for q in coords)
    assert g.diameter == d


def test_degenerate_cell_rejected():
    mesh = PolygonalMesh(
        vertices=np.array([[0, 0], [1, 0], [2, 0.0]]),
        cells=((0, 1, 2),),
        boundary=np.ones(3, dtype=bool),
        domain=(0, 0, 2, 1),
    )
    with pytest.raises(DegenerateCellError):
        compute_element_geometry(mesh, 0)


def test_undistorted_grid():
    m = generate_distorted_quad_mesh(2, 0.0)
    assert m.n_cells == 4 and m.n_vertices == 9
    for c in range(4):
        g = m.geometry(c)
        assert g.area == pytest.approx(1.0, abs=1e-15)
        assert g.diameter == pytest.approx(np.sqrt(2))


def test_distorted_deterministic_and_boundary_fixed():
    a = generate_distorted_quad_mesh(8, 0.3, seed=1)
    b = generate_distorted_quad_mesh(8, 0.3, seed=1)
    assert a.same_as(b)
    assert not a.same_as(generate_distorted_quad_mesh(8, 0.3, seed=2))
    base = generate_distorted_quad_mesh(8, 0.0)
    np.testing.assert_array_equal(a.vertices[a.boundary], base.vertices[base.boundary])
    # coarsest distorted level: h ~ 0.36
    assert 0.36 * 0.9 <= a.mesh_size <= 0.36 * 1.1


def test_distorted_displacement_bound():
    n, d = 8, 0.3
    a = generate_distorted_quad_mesh(n, d, seed=4)
    base = generate_distorted_quad_mesh(n, 0.0)
    shift = np.linalg.norm(a.vertices - base.vertices, axis=1)
    assert shift.max() <= d * (2.0 / n)


@pytest.mark.parametrize("bad", [dict(n_per_side=1), dict(n_per_side=4, distortion=0.5)])
def test_distorted_rejects_bad_args(bad):
    with pytest.raises(ValueError):
        generate_distorted_quad_mesh(**{"distortion": 0.1, **bad})


def test_nonconvex_smallest_instance():
    m = generate_nonconvex_mesh(2)
    assert all(is_simple(m.cell_coords(c)) for c in range(m.n_cells))
    total = sum(m.geometry(c).area for c in range(m.n_cells))
    assert abs(total - 4.0) <= 1e-10 * 4.0
    n_nonconvex = sum(not is_convex(m.cell_coords(c)) for c in range(m.n_cells))
    assert n_nonconvex >= m.n_cells / 2


@pytest.mark.parametrize("n", [2, 3, 6, 10])
def test_nonconvex_fraction(n):
    m = generate_nonconvex_mesh(n)
    n_nonconvex = sum(not is_convex(m.cell_coords(c)) for c in range(m.n_cells))
    assert n_nonconvex == n * (n - 1)
    assert n_nonconvex >= m.n_cells / 2


def test_nonconvex_refinement_halves_h():
    h1 = generate_nonconvex_mesh(10).mesh_size
    h2 = generate_nonconvex_mesh(20).mesh_size
    assert 0.45 <= h2 / h1 <= 0.55
    # coarsest nonconvex level: h ~ 0.30
    assert h1 == pytest.approx(0.30, rel=0.05)


def test_voronoi_symmetric_seeds_give_squares():
    seeds = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    m = generate_voronoi_mesh(4, 0, seeds=seeds)
    assert m.n_cells == 4
    for c in range(4):
        g = m.geometry(c)
        assert len(m.cells[c]) == 4
        assert g.area == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(g.centroid, seeds[c], atol=1e-14)


def lloyd_residual_after(n, iterations, seed):
    m = generate_voronoi_mesh(n, iterations, seed=seed)
    prev = generate_voronoi_mesh(n, iterations - 1, seed=seed)
    # cells after k iterations are generated by the centroids of the (k-1)-iteration cells
    return lloyd_residual(m, np.array([prev.geometry(c).centroid for c in range(n)])), m.mesh_size


@pytest.mark.parametrize("seed", range(4))
def test_voronoi_lloyd_fixed_point(seed):
    res, h = lloyd_residual_after(5, 100, seed)
    assert res < 1e-6 * h


def test_voronoi_lloyd_residual_decreases():
    early, _ = lloyd_residual_after(16, 10, 3)
    late, _ = lloyd_residual_after(16, 100, 3)
    assert late < 0.1 * early


def test_voronoi_properties():
    a = generate_voronoi_mesh(250, 50, seed=0)
    assert a.same_as(generate_voronoi_mesh(250, 50, seed=0))
    assert all(is_convex(a.cell_coords(c)) for c in range(a.n_cells))
    # coarsest Voronoi level: h = 0.20
    assert a.mesh_size == pytest.approx(0.20, rel=0.05)


def test_voronoi_duplicate_seeds_recover():
    seeds = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5], [0.5, 0.5]])
    m = generate_voronoi_mesh(5, 2, seeds=seeds)
    assert m.n_cells == 5


@pytest.mark.parametrize("name,factory", ALL_FAMILIES)
def test_family_invariants(name, factory):
    m = factory()
    validate_mesh(m)
    total = sum(m.geometry(c).area for c in range(m.n_cells))
    assert abs(total - 4.0) <= 1e-10 * 4.0
    assert m.mesh_size == max(m.geometry(c).diameter for c in range(m.n_cells))
    edges = {}
    for cell in m.cells:
        for a, b in zip(cell, np.roll(cell, -1)):
            edges[(int(a), int(b))] = edges.get((int(a), int(b)), 0) + 1
    assert max(edges.values()) == 1
    interior = [(a, b) for (a, b) in edges if not (m.boundary[a] and m.boundary[b])]
    assert all((b, a) in edges for a, b in interior)
    rep = check_regularity(m)
    assert 0 < rep.min_edge_to_diameter_ratio <= 1
    assert 0 < rep.star_shaped_estimate <= 1


@pytest.mark.parametrize(
    "family,small,large",
    [
        ("distorted", lambda: generate_distorted_quad_mesh(8, 0.3, seed=1), lambda: generate_distorted_quad_mesh(16, 0.3, seed=1)),
        ("nonconvex", lambda: generate_nonconvex_mesh(6), lambda: generate_nonconvex_mesh(12)),
        ("voronoi", lambda: generate_voronoi_mesh(100, 30, seed=1), lambda: generate_voronoi_mesh(400, 30, seed=1)),
    ],
)
def test_refinement_reduces_h(family, small, large):
    ratio = large().mesh_size / small().mesh_size
    assert 0.4 <= ratio <= 0.6


def test_regularity_uniform_grid():
    rep = check_regularity(generate_distorted_quad_mesh(4, 0.0))
    assert rep.min_edge_to_diameter_ratio == pytest.approx(1 / np.sqrt(2), abs=1e-14)
    # inscribed disk of a square of side w: w/2 over the diagonal w*sqrt(2)
    assert rep.star_shaped_estimate == pytest.approx(0.5 / np.sqrt(2), rel=1e-9)


def test_regularity_distorted_positive():
    rep = check_regularity(generate_distorted_quad_mesh(8, 0.3, seed=1))
    assert rep.min_edge_to_diameter_ratio > 0.5
    assert 0 <= rep.worst_cell_id < 64


def test_regularity_star_radius_of_chevron():
    # reflex vertex at the left-edge midpoint; the kernel is a wedge, not the whole cell
    m = generate_nonconvex_mesh(4)
    rep = check_regularity(m)
    square = check_regularity(generate_distorted_quad_mesh(4, 0.0))
    assert 0 < rep.star_shaped_estimate < square.star_shaped_estimate


@pytest.mark.parametrize("name,factory", ALL_FAMILIES)
def test_mesh_round_trip(tmp_path, name, factory):
    m = factory()
    path = tmp_path / f"{name}.mesh"
    write_mesh(m, path)
    back = read_mesh(path)
    assert back.same_as(m)
    assert back.domain == m.domain


def test_read_dangling_index(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("3\n0 0 1\n1 0 1\n0 1 1\n1\n3 0 1 7\n")
    with pytest.raises(MeshFormatError, match="7") as info:
        read_mesh(path)
    assert info.value.line == 6


def test_read_empty_file(tmp_path):
    path = tmp_path / "empty.mesh"
    path.write_text("")
    with pytest.raises(MeshFormatError):
        read_mesh(path)


def test_read_garbage_reports_line(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("# header\n2\n0 0 1\nnot a vertex\n")
    with pytest.raises(MeshFormatError, match="line 4"):
        read_mesh(path)


def test_validate_catches_hanging_edge():
    # two unit squares side by side, but the right one has an extra vertex on the shared edge
    v = np.array([[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1], [1, 0.5]], dtype=float)
    mesh = PolygonalMesh(vertices=v, cells=((0, 1, 4, 3), (1, 2, 5, 4, 6)), boundary=np.array([1, 1, 1, 1, 1, 1, 0], bool), domain=(0, 0, 2, 1))
    with pytest.raises(MeshError):
        validate_mesh(mesh)
