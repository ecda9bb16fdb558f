import warnings

import numpy as np
import pytest
from scipy.spatial import Voronoi, cKDTree

from vemlattice.errors import (DegenerateDiagramError, DegeneratePairError,
                               InfeasibleSpacingError, MeshError)
from vemlattice.geometry import points_in_polygon, signed_area
from vemlattice.mesh import (Disk, DomainSpec, PolygonalMesh, PolyElement, chord_count,
                             clipped_voronoi, edge_components, extract_lattice, generate_seeds,
                             interface_pairs, lattice_from_mesh, merge_phase,
                             mirror_seeds_across_interface, regular_polygon,
                             single_inclusion_mesh, submesh, tessellation_to_mesh)

UNIT = DomainSpec.rectangle()


def random_tess(n=50, seed=0, domain=UNIT):
    rng = np.random.default_rng(seed)
    lo, hi = domain.outer.min(0), domain.outer.max(0)
    pts = []
    while len(pts) < n:
        p = lo + rng.random(2) * (hi - lo)
        if domain.contains(p[None])[0]:
            pts.append(p)
    return clipped_voronoi(np.array(pts), domain)


def test_two_seeds_split_square():
    tess = clipped_voronoi(np.array([[0.25, 0.5], [0.75, 0.5]]), UNIT)
    np.testing.assert_allclose(tess.cell_areas(), [0.5, 0.5])
    assert len(tess.facets) == 1
    f = tess.facets[0]
    np.testing.assert_allclose(sorted([f.p0[1], f.p1[1]]), [0, 1])
    np.testing.assert_allclose([f.p0[0], f.p1[0]], [0.5, 0.5])
    lat = extract_lattice(tess)
    el = lat.elements[0]
    assert el.length == pytest.approx(1.0)
    assert el.distance == pytest.approx(0.5)
    np.testing.assert_allclose(el.normal, [1, 0])


def test_quadrants(quadrant_mesh):
    assert quadrant_mesh.n_nodes == 9
    assert quadrant_mesh.n_elements == 4
    assert all(el.n_vertices == 4 for el in quadrant_mesh.elements)
    np.testing.assert_allclose(quadrant_mesh.areas, 0.25)
    tess = clipped_voronoi(np.array([[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]]), UNIT)
    assert len(extract_lattice(tess).elements) == 4
    assert sorted(quadrant_mesh.tagged("bottom").tolist()) == sorted(
        np.flatnonzero(np.isclose(quadrant_mesh.nodes[:, 1], 0)).tolist())
    assert len(quadrant_mesh.tagged("outer")) == 8


@pytest.mark.parametrize("seed", range(5))
def test_partition_and_nearest_seed(seed):
    tess = random_tess(50, seed)
    assert tess.cell_areas().sum() == pytest.approx(1.0, rel=1e-10)
    tree = cKDTree(tess.seeds)
    rng = np.random.default_rng(seed + 100)
    for i, cell in enumerate(tess.cells):
        assert points_in_polygon(tess.seeds[i:i + 1], cell)[0]
        # random interior points by barycentric sampling of the fan about the seed
        for _ in range(10):
            k = rng.integers(len(cell))
            a, b = cell[k], cell[(k + 1) % len(cell)]
            w = rng.dirichlet([1, 1, 1])
            p = w[0] * tess.seeds[i] + w[1] * a + w[2] * b
            d, j = tree.query(p)
            assert j == i or abs(d - np.linalg.norm(p - tess.seeds[i])) < 1e-12


def test_interior_cells_match_scipy_voronoi():
    tess = random_tess(60, 11)
    vor = Voronoi(tess.seeds)
    checked = 0
    for i, cell in enumerate(tess.cells):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) == 0:
            continue
        verts = vor.vertices[region]
        if not np.all(points_in_polygon(verts, UNIT.outer)) or np.any(
                np.minimum(verts, 1 - verts) < 1e-6):
            continue
        assert len(verts) == len(cell)
        d = np.linalg.norm(verts[:, None] - cell[None], axis=2)
        assert d.min(axis=1).max() < 1e-10
        checked += 1
    assert checked > 10


def test_facets_are_dual():
    tess = random_tess(80, 3)
    for f in tess.facets:
        d = tess.seeds[f.j] - tess.seeds[f.i]
        d /= np.linalg.norm(d)
        np.testing.assert_allclose(f.normal, d, atol=1e-10)
        # facet endpoints equidistant from both seeds
        for p in (f.p0, f.p1):
            assert abs(np.linalg.norm(p - tess.seeds[f.i]) - np.linalg.norm(p - tess.seeds[f.j])) < 1e-10


def test_lattice_counts_match_facet_oracle():
    tess = random_tess(120, 5)
    mesh = tessellation_to_mesh(tess)
    interior = [k for k, users in mesh.edge_map().items() if len(users) == 2]
    lat = extract_lattice(tess)
    assert len(lat.elements) == len(tess.facets) == len(interior)
    for el in lat.elements:
        assert el.i != el.j


def test_dedup_and_area():
    tess = random_tess(40, 9)
    mesh = tessellation_to_mesh(tess)
    naive = sum(len(c) for c in tess.cells)
    assert mesh.n_nodes < naive
    # every node is unique
    d = cKDTree(mesh.nodes).query(mesh.nodes, k=2)[0][:, 1]
    assert d.min() > 1e-9
    assert mesh.areas.sum() == pytest.approx(1.0, rel=1e-10)
    # Euler for a planar disc: V - E + F = 1
    assert mesh.n_nodes - len(mesh.edge_map()) + mesh.n_elements == 1


def test_circle_domain_and_tags():
    dom = DomainSpec.circle(1.0, 40)
    tess = random_tess(100, 1, dom)
    mesh = tessellation_to_mesh(tess)
    assert mesh.areas.sum() == pytest.approx(dom.area, rel=1e-10)
    outer = mesh.tagged("outer")
    bnd = mesh.boundary_nodes()
    assert set(bnd.tolist()) == set(outer.tolist())


def test_generate_seeds():
    s1 = generate_seeds(UNIT, 0.5, 3)
    s2 = generate_seeds(UNIT, 0.5, 3)
    assert np.array_equal(s1, s2)
    d = np.linalg.norm(s1[:, None] - s1[None], axis=2) + np.eye(len(s1)) * 9
    assert d.min() >= 0.25
    for seed in range(10):
        s = generate_seeds(UNIT, 0.1, seed)
        assert 50 <= len(s) <= 200
        d = cKDTree(s).query(s, k=2)[0][:, 1]
        assert d.min() >= 0.05
        assert np.all(UNIT.contains(s))


def test_generate_seeds_errors():
    with pytest.raises(InfeasibleSpacingError):
        generate_seeds(UNIT, 0.0, 0)
    with pytest.raises(InfeasibleSpacingError):
        generate_seeds(UNIT, 0.1, 0, keep_out=lambda p: np.ones(len(p), bool))


def test_clipped_voronoi_errors():
    with pytest.raises(DegenerateDiagramError):
        clipped_voronoi(np.array([[0.2, 0.2], [0.2, 0.2], [0.7, 0.7]]), UNIT)
    with pytest.raises(MeshError):
        clipped_voronoi(np.array([[0.2, 0.2], [1.5, 0.5]]), UNIT)
    with pytest.raises(MeshError):
        clipped_voronoi(np.array([[0.2, 0.2]]), UNIT)


def test_mirrored_pair_across_line():
    line = np.array([[0.0, 0.5], [1.0, 0.5]])
    seeds = interface_pairs(line, 0.1, closed=False)
    tess = clipped_voronoi(seeds, UNIT)
    f = tess.facets[0]
    np.testing.assert_allclose([f.p0[1], f.p1[1]], [0.5, 0.5])
    with pytest.raises(DegeneratePairError):
        interface_pairs(line, 1.5, closed=False)


def test_circle_interface_chords():
    a, n = 0.25, 24
    ring = regular_polygon((0.5, 0.5), a, n)
    chord = 2 * a * np.sin(np.pi / n)
    seeds = generate_seeds(UNIT, 0.05, 0)
    seeds = mirror_seeds_across_interface(seeds, ring, 0.15 * chord)
    tess = clipped_voronoi(seeds, UNIT)
    inside = points_in_polygon(tess.seeds, ring)
    chords = [f for f in tess.facets if inside[f.i] != inside[f.j]]
    assert len(chords) == n
    sag = a * (1 - np.cos(np.pi / n))
    for f in chords:
        # endpoints on the circle, midpoint within the chord sagitta
        for p in (f.p0, f.p1):
            assert abs(np.linalg.norm(p - 0.5) - a) < 1e-9
        assert a - np.linalg.norm(f.midpoint - 0.5) == pytest.approx(sag, rel=1e-8)
    assert sum(f.length for f in chords) == pytest.approx(n * chord, rel=1e-10)


def test_bimaterial_mesh_single_phase_elements():
    from vemlattice.bench import BimaterialProblem, bimaterial_discretization
    disc = bimaterial_discretization(BimaterialProblem(), 0.08, 2)
    ring = regular_polygon((0, 0), 0.25, chord_count(0.25, 0.08))
    phase = np.where(points_in_polygon(disc.mesh.centroids, ring), 1, 2)
    np.testing.assert_array_equal(phase, disc.mesh.phase_ids)
    assert np.isclose(disc.mesh.areas[disc.mesh.phase_ids == 1].sum(), -signed_area(ring[::-1]))


def test_determinism():
    a = tessellation_to_mesh(clipped_voronoi(generate_seeds(UNIT, 0.1, 4), UNIT))
    b = tessellation_to_mesh(clipped_voronoi(generate_seeds(UNIT, 0.1, 4), UNIT))
    assert np.array_equal(a.nodes, b.nodes)
    assert all(np.array_equal(x.loops[0], y.loops[0]) for x, y in zip(a.elements, b.elements))


def test_single_inclusion_mesh():
    m = single_inclusion_mesh()
    assert m.n_elements == 2 and m.n_nodes == 11
    assert len(m.elements[1].loops) == 2
    np.testing.assert_allclose(m.areas, [0.17035, 0.82965])
    assert m.areas.sum() == pytest.approx(1.0)


def test_merge_and_submesh():
    tess = random_tess(60, 2)
    mesh = tessellation_to_mesh(tess, lambda p: np.where(np.linalg.norm(p - 0.5, axis=1) < 0.25, 1, 0))
    merged = merge_phase(mesh, 1)
    assert merged.areas.sum() == pytest.approx(1.0, rel=1e-12)
    n1 = int((merged.phase_ids == 1).sum())
    assert n1 == len(set(edge_components(mesh, mesh.phase_ids == 1)[mesh.phase_ids == 1].tolist()))
    used = np.unique(np.concatenate([el.vertices for el in merged.elements]))
    assert len(used) == merged.n_nodes
    sub = submesh(mesh, mesh.phase_ids == 0)
    assert sub.areas.sum() == pytest.approx(mesh.areas[mesh.phase_ids == 0].sum())


def test_drop_cells_and_lattice_from_mesh():
    tess = random_tess(80, 6)
    clf = lambda p: np.where(p[:, 0] > 0.8, -1, 0)
    mesh = tessellation_to_mesh(tess, clf)
    lat = extract_lattice(tess, clf)
    assert lat.n_nodes == mesh.n_elements
    lat2 = lattice_from_mesh(mesh)
    key = lambda L: sorted((e.i, e.j, round(e.length, 12)) for e in L.elements)
    assert key(lat) == key(lat2)
    with pytest.raises(MeshError):
        lattice_from_mesh(single_inclusion_mesh())


def test_mesh_validation():
    with pytest.raises(MeshError):
        PolygonalMesh(np.zeros((3, 2)), [PolyElement([[0, 1, 5]])])
    with pytest.raises(MeshError):
        DomainSpec.rectangle(inclusions=[Disk((0.5, 0.5), 0.6)])
    with pytest.raises(MeshError):
        DomainSpec(np.array([[0, 0], [0, 1], [1, 1], [1, 0.0]]), ("a",) * 4)
