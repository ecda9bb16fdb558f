import json

import meshio
import numpy as np
import pytest
import yaml

from vemlattice import io as vio
from vemlattice.errors import ConfigError, MeshError
from vemlattice.materials import PLANE_STRESS, MaterialPhase
from vemlattice.mesh import DomainSpec, clipped_voronoi, generate_seeds, single_inclusion_mesh, tessellation_to_mesh


def parse_cell_data(path):
    """Minimal independent reader for the CELL_DATA scalars of a legacy file."""
    tokens = open(path).read().split()
    out = {}
    k = tokens.index("CELL_DATA")
    n = int(tokens[k + 1])
    k += 2
    while k < len(tokens):
        if tokens[k] == "SCALARS":
            name = tokens[k + 1]
            k += 6        # SCALARS name type 1 LOOKUP_TABLE default
            out[name] = np.array(tokens[k:k + n], dtype=float)
            k += n
        elif tokens[k] == "VECTORS":
            name = tokens[k + 1]
            k += 3
            out[name] = np.array(tokens[k:k + 3 * n], dtype=float).reshape(n, 3)
            k += 3 * n
        else:
            break
    return out


@pytest.fixture
def voronoi_mesh():
    dom = DomainSpec.rectangle()
    tess = clipped_voronoi(generate_seeds(dom, 0.15, 2), dom)
    return tessellation_to_mesh(tess)


def test_mesh_round_trip_lossless(tmp_path, voronoi_mesh):
    phases = {0: MaterialPhase(1.0 / 3.0, 0.1 + 0.2, PLANE_STRESS)}
    path = tmp_path / "m.json"
    vio.write_mesh(path, voronoi_mesh, phases)
    m2, ph2 = vio.read_mesh(path)
    assert np.array_equal(m2.nodes, voronoi_mesh.nodes)
    assert np.array_equal(m2.generators, voronoi_mesh.generators)
    assert ph2 == phases
    for a, b in zip(m2.elements, voronoi_mesh.elements):
        assert a.phase_id == b.phase_id and all(np.array_equal(x, y) for x, y in zip(a.loops, b.loops))
    assert {k: v.tolist() for k, v in m2.node_tags.items()} == \
        {k: v.tolist() for k, v in voronoi_mesh.node_tags.items()}
    assert vio.mesh_hash(m2) == vio.mesh_hash(voronoi_mesh)
    # holes survive too
    sept = single_inclusion_mesh()
    vio.write_mesh(tmp_path / "s.json", sept)
    s2, _ = vio.read_mesh(tmp_path / "s.json")
    assert len(s2.elements[1].loops) == 2 and np.array_equal(s2.nodes, sept.nodes)


def test_mesh_file_errors(tmp_path):
    (tmp_path / "x.json").write_text("{")
    with pytest.raises(MeshError):
        vio.read_mesh(tmp_path / "x.json")
    doc = vio.mesh_to_dict(single_inclusion_mesh())
    with pytest.raises(MeshError):
        vio.mesh_from_dict({**doc, "version": 99})
    with pytest.raises(MeshError):
        vio.mesh_from_dict({**doc, "nodes": doc["nodes"][::-1]})


def test_expression_evaluator():
    f = vio.compile_expression("1 + x - 2*y**2 + sin(pi*x)")
    x, y = np.array([0.0, 0.5]), np.array([1.0, 2.0])
    np.testing.assert_allclose(f(x, y), 1 + x - 2 * y ** 2 + np.sin(np.pi * x))
    np.testing.assert_allclose(vio.compile_expression(0.25)(x, y), [0.25, 0.25])
    np.testing.assert_allclose(vio.compile_expression("3")(x, y), [3.0, 3.0])
    for bad in ["__import__('os')", "x.real", "open('f')", "[x]", "z + 1", "x if y else 1"]:
        with pytest.raises(ConfigError):
            vio.compile_expression(bad)


def test_minimal_config_defaults():
    cfg = vio.config_from_dict({"benchmark": "patch"})
    assert cfg.command == "bench" and cfg.benchmark == "patch"
    assert cfg.solver == {"method": "direct", "tol": 1e-12, "max_iter": None}
    cfg = vio.config_from_dict({"phases": [{"phase_id": 0, "E": 1, "nu": 0.3}]})
    assert cfg.phases[0].mode == "plane_strain"


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="bogus, zzz"):
        vio.config_from_dict({"zzz": 1, "bogus": 2})
    with pytest.raises(ConfigError, match="missing"):
        vio.config_from_dict({"command": "solve"})
    with pytest.raises(ConfigError):
        vio.config_from_dict({"solver": {"tol": -1}})
    vio.write_mesh(tmp_path / "m.json", single_inclusion_mesh())
    doc = {"command": "solve", "mesh": {"file": "m.json"},
           "phases": [{"phase_id": 0, "E": 1, "nu": 0.3}],
           "boundary": {"dirichlet": [{"tag": "outer", "u": "x", "v": "y"}]}}
    with pytest.raises(ConfigError, match="phase_id.*1"):
        vio.config_from_dict(doc, str(tmp_path))
    doc["phases"].append({"phase_id": 1, "E": 2, "nu": 0.2})
    vio.config_from_dict(doc, str(tmp_path))
    with pytest.raises(ConfigError, match="does not exist"):
        vio.config_from_dict({**doc, "mesh": {"file": "nope.json"}}, str(tmp_path))


def test_config_round_trip(tmp_path):
    doc = {"command": "solve", "model": "both", "mesh": {"generate": {"domain": "rectangle", "spacing": 0.2}},
           "phases": [{"phase_id": 0, "E": 2.0, "nu": 0.25, "mode": "plane_stress"}],
           "boundary": {"dirichlet": [{"tag": "left", "u": 0, "v": 0}],
                        "tractions": [{"tag": "right", "t": [1.0, 0.0]}]},
           "solver": {"method": "cg", "tol": 1e-10}, "rng_seed": 4}
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(doc))
    c1 = vio.parse_config(p)
    p2 = tmp_path / "c2.yaml"
    p2.write_text(c1.dump())
    c2 = vio.parse_config(p2)
    assert c1.to_dict() == c2.to_dict() and c1.hash == c2.hash


def test_vtk_quadrant_reparse(tmp_path, quadrant_mesh):
    rng = np.random.default_rng(1)
    disp = rng.normal(size=(9, 2)) * np.pi
    sig = rng.normal(size=(4, 3))
    b = vio.ResultBundle("vem", disp, sig)
    path = tmp_path / "q.vtk"
    vio.export_mesh_vtk(path, quadrant_mesh, b)
    assert open(path).readline().strip() == "# vtk DataFile Version 3.0"
    m = meshio.read(path)
    assert len(m.points) == 9
    assert sum(len(c.data) for c in m.cells) == 4
    np.testing.assert_array_equal(m.point_data["displacement"][:, :2], disp)   # 17 digits
    cd = parse_cell_data(path)
    np.testing.assert_array_equal(cd["sigma_xx"], sig[:, 0])
    np.testing.assert_allclose(cd["sigma_2"], b.principal()[:, 1])


def test_vtk_holes_and_triangle_cell_data(tmp_path):
    sept = single_inclusion_mesh()
    b = vio.ResultBundle("vem", np.zeros((sept.n_nodes, 2)), np.array([[1.0, 2, 3], [4.0, 5, 6]]))
    path = tmp_path / "s.vtk"
    vio.export_mesh_vtk(path, sept, b)
    m = meshio.read(path)
    tri = [c for c in m.cells if c.type == "triangle"][0].data
    from vemlattice.geometry import signed_area
    area = sum(signed_area(sept.nodes[t]) for t in tri)
    assert area == pytest.approx(sept.areas[1], rel=1e-12)
    cd = parse_cell_data(path)
    assert np.all(cd["element_id"][1:] == 1) and cd["sigma_xx"][0] == 1.0


def test_vtk_empty(tmp_path):
    path = tmp_path / "e.vtk"
    vio.write_vtk(path, np.zeros((0, 2)), [], [])
    m = meshio.read(path)
    assert len(m.points) == 0


def test_lattice_vtk(tmp_path):
    cells = [np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])]
    gens = np.array([[0.5, 0.5]])
    b = vio.ResultBundle("vclm", [[0.1, 0.2]], [[1.0, 0, 0]], "node", rotations=[0.5])
    path = tmp_path / "l.vtk"
    vio.export_lattice_vtk(path, cells, gens, b)
    m = meshio.read(path)
    assert len(m.points) == 5
    d = m.point_data["displacement"][:, :2]
    np.testing.assert_allclose(d[4], [0.1, 0.2])
    np.testing.assert_allclose(d[0], [0.1 + 0.5 * 0.5, 0.2 - 0.5 * 0.5])


def test_bundle_round_trip(tmp_path):
    b = vio.ResultBundle("vclm", np.ones((3, 2)) / 3, np.ones((3, 3)) / 7, "node",
                         rotations=np.arange(3.0), reports=[{"model": "VCLM", "rel_l2": 0.1}],
                         metadata={"mesh_hash": "abc"})
    b.write(tmp_path / "b.json")
    b2 = vio.ResultBundle.read(tmp_path / "b.json")
    assert np.array_equal(b2.displacements, b.displacements)
    assert np.array_equal(b2.rotations, b.rotations)
    assert b2.reports == b.reports and b2.metadata == b.metadata
    with pytest.raises(ValueError):
        b.check(4, 4)


def test_table_and_csv(tmp_path):
    txt = vio.format_table([{"model": "VEM", "rel_l2": 1.5e-3}, {"model": "VCLM", "rel_l2": 2.7e-3}])
    assert "1.500e-03" in txt and txt.splitlines()[0].startswith("model")
    vio.write_profile_csv(tmp_path / "p.csv", np.array([[0.1, 2.0, 2.1]]))
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "r_over_b,sigma_rr,sigma_rr_exact"
