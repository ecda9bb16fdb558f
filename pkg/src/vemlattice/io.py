"""Mesh files, run configuration, result bundles and legacy VTK export.

Mesh file (JSON, ``schema = "vemlattice-mesh"``, ``version = 1``)::

    {
      "schema": "vemlattice-mesh", "version": 1,
      "nodes":    [[id, x, y], ...],
      "elements": [{"id": 0, "phase_id": 1, "loops": [[0, 1, 2, 3], [7, 6, 5]]}, ...],
      "node_tags": {"left": [0, 3], ...},
      "phases":   [{"phase_id": 1, "E": 1.0, "nu": 0.3, "mode": "plane_strain"}, ...],
      "generators": [[x, y], ...]            (optional, one per element)
    }

Ids must be ``0..n-1`` in order. Floats are written with Python's shortest
round-trip representation, so a write/read cycle is lossless.
"""
from __future__ import annotations

import ast
import copy
import hashlib
import json
import math
import operator
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import yaml

from .errors import ConfigError, MeshError
from .materials import PLANE_STRAIN, PLANE_STRESS, MaterialPhase
from .mesh import PolyElement, PolygonalMesh
from .vem import principal_stresses

MESH_SCHEMA = "vemlattice-mesh"
MESH_VERSION = 1
BUNDLE_SCHEMA = "vemlattice-result"
BUNDLE_VERSION = 1


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_of(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()


# --------------------------------------------------------------------------- mesh files

def phase_to_dict(pid: int, phase: MaterialPhase) -> dict:
    return {"phase_id": int(pid), "E": float(phase.E), "nu": float(phase.nu), "mode": phase.mode}


def phase_from_dict(d: dict) -> tuple[int, MaterialPhase]:
    try:
        return int(d["phase_id"]), MaterialPhase(float(d["E"]), float(d["nu"]),
                                                 d.get("mode", PLANE_STRAIN))
    except KeyError as exc:
        raise ConfigError(f"phase entry {d!r} lacks key {exc}") from None


def mesh_to_dict(mesh: PolygonalMesh, phases: dict | None = None) -> dict:
    out = {
        "schema": MESH_SCHEMA,
        "version": MESH_VERSION,
        "nodes": [[i, float(x), float(y)] for i, (x, y) in enumerate(mesh.nodes)],
        "elements": [{"id": e, "phase_id": int(el.phase_id),
                      "loops": [[int(v) for v in loop] for loop in el.loops]}
                     for e, el in enumerate(mesh.elements)],
        "node_tags": {k: [int(i) for i in v] for k, v in sorted(mesh.node_tags.items())},
        "phases": [phase_to_dict(k, p) for k, p in sorted((phases or {}).items())],
    }
    if mesh.generators is not None:
        out["generators"] = [[float(x), float(y)] for x, y in mesh.generators]
    return out


def mesh_from_dict(doc: dict) -> tuple[PolygonalMesh, dict]:
    """Inverse of :func:`mesh_to_dict`; returns ``(mesh, phases)``."""
    if doc.get("schema") != MESH_SCHEMA:
        raise MeshError(f"not a mesh document (schema {doc.get('schema')!r})")
    if doc.get("version") != MESH_VERSION:
        raise MeshError(f"unsupported mesh schema version {doc.get('version')!r}")
    try:
        nodes = doc["nodes"]
        ids = [int(n[0]) for n in nodes]
        if ids != list(range(len(nodes))):
            raise MeshError("node ids must be 0..n-1 in order")
        elems = doc["elements"]
        if [int(e["id"]) for e in elems] != list(range(len(elems))):
            raise MeshError("element ids must be 0..m-1 in order")
        coords = np.array([[float(n[1]), float(n[2])] for n in nodes]).reshape(-1, 2)
        elements = [PolyElement(e["loops"], int(e["phase_id"])) for e in elems]
        tags = {k: v for k, v in doc.get("node_tags", {}).items()}
    except (KeyError, TypeError, IndexError) as exc:
        raise MeshError(f"malformed mesh document: {exc!r}") from None
    gens = doc.get("generators")
    mesh = PolygonalMesh(coords, elements, tags,
                         None if gens is None else np.array(gens, dtype=float))
    phases = dict(phase_from_dict(p) for p in doc.get("phases", []))
    return mesh, phases


def write_mesh(path, mesh: PolygonalMesh, phases: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(mesh, phases), fh, indent=1)
        fh.write("\n")


def read_mesh(path) -> tuple[PolygonalMesh, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshError(f"{path}: invalid JSON ({exc})") from None
    return mesh_from_dict(doc)


def mesh_hash(mesh: PolygonalMesh) -> str:
    return sha256_of(mesh_to_dict(mesh))


# --------------------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "sqrt": np.sqrt,
          "log": np.log, "abs": np.abs, "atan2": np.arctan2, "hypot": np.hypot}
_CONSTS = {"pi": math.pi, "e": math.e}


def compile_expression(text) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Safe arithmetic expression in ``x`` and ``y`` (numbers, + - * / **, a few functions)."""
    if isinstance(text, (int, float)):
        value = float(text)
        return lambda x, y: np.full(np.shape(x), value)
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return
        if isinstance(node, ast.Name) and (node.id in ("x", "y") or node.id in _CONSTS):
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
            return
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            for a in node.args:
                check(a)
            return
        raise ConfigError(f"unsupported construct in expression {text!r}")

    check(tree)

    def evaluate(node, env):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, env)
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, env), evaluate(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](evaluate(node.operand, env))
        return _FUNCS[node.func.id](*[evaluate(a, env) for a in node.args])

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(evaluate(tree, {"x": x, "y": np.asarray(y, dtype=float)}),
                               x.shape).astype(float)
    return fn


# --------------------------------------------------------------------------- run config

COMMANDS = ("mesh", "solve", "bench", "export")
MODELS = ("vem", "vclm", "both")
BENCHMARKS = ("patch", "inclusion", "threephase")
TOP_KEYS = {"command", "model", "benchmark", "mesh", "phases", "boundary", "solver",
            "rng_seed", "output", "options"}
SOLVER_DEFAULTS = {"method": "direct", "tol": 1e-12, "max_iter": None}
MESH_KEYS = {"file", "generate"}
GENERATE_KEYS = {"domain", "width", "height", "radius", "n_sides", "spacing", "rng_seed"}
OUTPUT_KEYS = {"bundle", "vtk", "csv", "report"}


@dataclass
class RunConfig:
    command: str = "bench"
    model: str = "vem"
    benchmark: str | None = "patch"
    mesh: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)      # phase_id -> MaterialPhase
    boundary: dict = field(default_factory=dict)
    solver: dict = field(default_factory=lambda: dict(SOLVER_DEFAULTS))
    rng_seed: int = 0
    output: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    base_dir: str = "."

    def to_dict(self) -> dict:
        out = {"command": self.command, "model": self.model, "benchmark": self.benchmark,
               "mesh": copy.deepcopy(self.mesh),
               "phases": [phase_to_dict(k, p) for k, p in sorted(self.phases.items())],
               "boundary": copy.deepcopy(self.boundary), "solver": dict(self.solver),
               "rng_seed": self.rng_seed, "output": dict(self.output),
               "options": copy.deepcopy(self.options)}
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @property
    def hash(self) -> str:
        return sha256_of(self.to_dict())

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)


def _unknown(given, allowed, where: str) -> None:
    extra = sorted(set(given) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _choice(value, allowed, name: str):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {', '.join(allowed)}; got {value!r}")
    return value


def config_from_dict(doc: dict | None, base_dir: str = ".", check_files: bool = True
                     ) -> RunConfig:
    """Validate a config mapping and fill defaults."""
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    _unknown(doc, TOP_KEYS, "config")
    cfg = RunConfig(base_dir=base_dir)
    cfg.command = _choice(doc.get("command", "bench"), COMMANDS, "command")
    cfg.model = _choice(doc.get("model", "vem"), MODELS, "model")
    if cfg.command == "bench":
        cfg.benchmark = _choice(doc.get("benchmark", "patch"), BENCHMARKS, "benchmark")
    else:
        cfg.benchmark = doc.get("benchmark")
        if cfg.benchmark is not None:
            _choice(cfg.benchmark, BENCHMARKS, "benchmark")
    cfg.rng_seed = int(doc.get("rng_seed", 0))

    solver = doc.get("solver") or {}
    _unknown(solver, SOLVER_DEFAULTS, "solver")
    cfg.solver = {**SOLVER_DEFAULTS, **solver}
    _choice(cfg.solver["method"], ("direct", "cg"), "solver.method")
    cfg.solver["tol"] = float(cfg.solver["tol"])
    if not cfg.solver["tol"] > 0:
        raise ConfigError("solver.tol must be positive")

    output = doc.get("output") or {}
    _unknown(output, OUTPUT_KEYS, "output")
    cfg.output = dict(output)
    cfg.options = dict(doc.get("options") or {})

    phases = {}
    for entry in doc.get("phases") or []:
        if not isinstance(entry, dict):
            raise ConfigError(f"phase entry {entry!r} is not a mapping")
        _unknown(entry, {"phase_id", "E", "nu", "mode"}, "phase entry")
        entry = {"mode": PLANE_STRAIN, **entry}
        _choice(entry["mode"], (PLANE_STRAIN, PLANE_STRESS), "phase mode")
        pid, phase = phase_from_dict(entry)
        if pid in phases:
            raise ConfigError(f"phase_id {pid} defined twice")
        phases[pid] = phase
    cfg.phases = phases

    mesh = doc.get("mesh") or {}
    _unknown(mesh, MESH_KEYS, "mesh")
    if "generate" in mesh:
        _unknown(mesh["generate"], GENERATE_KEYS, "mesh.generate")
    cfg.mesh = copy.deepcopy(mesh)

    boundary = doc.get("boundary") or {}
    _unknown(boundary, {"dirichlet", "tractions"}, "boundary")
    for item in boundary.get("dirichlet", []):
        _unknown(item, {"tag", "nodes", "u", "v", "theta"}, "boundary.dirichlet entry")
        if ("tag" in item) == ("nodes" in item):
            raise ConfigError("each dirichlet entry needs exactly one of 'tag' or 'nodes'")
        for comp in ("u", "v", "theta"):
            if comp in item:
                compile_expression(item[comp])
    for item in boundary.get("tractions", []):
        _unknown(item, {"tag", "t"}, "boundary.tractions entry")
        if "tag" not in item or "t" not in item:
            raise ConfigError("each traction entry needs 'tag' and 't'")
    cfg.boundary = copy.deepcopy(boundary)

    if cfg.command == "solve":
        missing = [k for k in ("mesh", "boundary") if not doc.get(k)]
        if missing:
            raise ConfigError(f"missing required key(s) for solve: {', '.join(missing)}")
        if not mesh:
            raise ConfigError("mesh needs 'file' or 'generate'")
    if check_files and "file" in mesh:
        path = cfg.resolve(mesh["file"])
        if not os.path.exists(path):
            raise ConfigError(f"mesh file {path} does not exist")
        m, file_phases = read_mesh(path)
        validate_phases(m, {**file_phases, **cfg.phases})
    return cfg


def validate_phases(mesh: PolygonalMesh, phases: dict) -> None:
    used = sorted(set(mesh.phase_ids.tolist()))
    missing = [p for p in used if p not in phases]
    if missing:
        raise ConfigError(f"mesh uses undefined phase_id(s): {', '.join(map(str, missing))}")


def parse_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return config_from_dict(doc, os.path.dirname(os.path.abspath(path)))


# --------------------------------------------------------------------------- result bundle

@dataclass
class ResultBundle:
    model: str
    displacements: np.ndarray                 # (n, 2)
    stresses: np.ndarray                      # (m, 3) Voigt (sxx, syy, sxy)
    stress_location: str = "element"          # "element" (VEM) or "node" (lattice)
    rotations: np.ndarray | None = None       # lattice only
    reports: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.displacements = np.asarray(self.displacements, dtype=float).reshape(-1, 2)
        self.stresses = np.asarray(self.stresses, dtype=float).reshape(-1, 3)
        if self.rotations is not None:
            self.rotations = np.asarray(self.rotations, dtype=float).ravel()
            if len(self.rotations) != len(self.displacements):
                raise ValueError("one rotation per lattice node is required")

    def check(self, n_points: int, n_cells: int) -> None:
        if len(self.displacements) != n_points:
            raise ValueError(f"{len(self.displacements)} displacements for {n_points} points")
        expected = n_points if self.stress_location == "node" else n_cells
        if len(self.stresses) != expected:
            raise ValueError(f"{len(self.stresses)} stresses, expected {expected}")

    def principal(self) -> np.ndarray:
        return np.array([principal_stresses(s)[0] for s in self.stresses]).reshape(-1, 2)

    def to_dict(self) -> dict:
        out = {"schema": BUNDLE_SCHEMA, "version": BUNDLE_VERSION, "model": self.model,
               "displacements": self.displacements.tolist(),
               "stresses": self.stresses.tolist(), "stress_location": self.stress_location,
               "reports": self.reports, "metadata": self.metadata}
        if self.rotations is not None:
            out["rotations"] = self.rotations.tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ResultBundle":
        if doc.get("schema") != BUNDLE_SCHEMA:
            raise ValueError(f"not a result bundle (schema {doc.get('schema')!r})")
        return cls(doc["model"], np.array(doc["displacements"], dtype=float),
                   np.array(doc["stresses"], dtype=float), doc["stress_location"],
                   None if "rotations" not in doc else np.array(doc["rotations"], dtype=float),
                   doc.get("reports", []), doc.get("metadata", {}))

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "ResultBundle":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------------------- VTK

VTK_VERTEX, VTK_TRIANGLE, VTK_POLYGON = 1, 5, 7


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_vtk(path, points: np.ndarray, cells: list, cell_types: list,
              point_data: dict | None = None, cell_data: dict | None = None,
              title: str = "vemlattice") -> None:
    """Legacy ASCII unstructured grid. Data arrays of shape (n,) are scalars,
    (n, 2) or (n, 3) vectors (2D vectors get a zero z component)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(points)} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in points]
    size = sum(len(c) + 1 for c in cells)
    lines.append(f"CELLS {len(cells)} {size}")
    lines += [" ".join(str(int(v)) for v in [len(c), *c]) for c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(int(t)) for t in cell_types]

    def block(kind: str, n: int, data: dict | None):
        if not data or n == 0:
            return
        lines.append(f"{kind} {n}")
        for name, arr in data.items():
            arr = np.asarray(arr, dtype=float)
            if len(arr) != n:
                raise ValueError(f"{kind} array {name!r} has {len(arr)} entries, expected {n}")
            if arr.ndim == 1:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_fmt(v) for v in arr)
            else:
                lines.append(f"VECTORS {name} double")
                for row in arr:
                    vals = list(row) + [0.0] * (3 - len(row))
                    lines.append(" ".join(_fmt(v) for v in vals))

    block("POINT_DATA", len(points), point_data)
    block("CELL_DATA", len(cells), cell_data)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _triangulate_with_holes(nodes: np.ndarray, loops: list) -> list:
    """Ear-clipping triangulation of a polygon with holes (export only).

    Holes are spliced into the outer ring through a bridge from their
    rightmost vertex to a visible outer vertex, then the resulting weakly
    simple polygon is ear-clipped.
    """
    from .geometry import signed_area
    ring = [int(v) for v in loops[0]]
    holes = sorted(loops[1:], key=lambda h: -nodes[h, 0].max())
    for hole in holes:
        hole = [int(v) for v in hole]
        k = int(np.argmax(nodes[hole, 0]))
        h = hole[k]
        # visible ring vertex: the nearest one whose bridge crosses no edge
        best = None
        for idx in sorted(range(len(ring)), key=lambda i: np.linalg.norm(nodes[ring[i]] - nodes[h])):
            if not _crosses(nodes, ring, hole, nodes[h], nodes[ring[idx]], h, ring[idx]):
                best = idx
                break
        if best is None:
            raise MeshError("cannot bridge hole for triangulation")
        hole_seq = hole[k:] + hole[:k]
        ring = ring[:best + 1] + hole_seq + [h] + ring[best:]
    tris = []
    idx = list(range(len(ring)))
    guard = 0
    while len(idx) > 3 and guard < 10 * len(ring) ** 2:
        guard += 1
        n = len(idx)
        for k in range(n):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % n]
            pa, pb, pc = nodes[ring[a]], nodes[ring[b]], nodes[ring[c]]
            if signed_area(np.array([pa, pb, pc])) <= 0:
                continue
            inside = False
            for m in idx:
                if m in (a, b, c) or ring[m] in (ring[a], ring[b], ring[c]):
                    continue
                if _in_triangle(nodes[ring[m]], pa, pb, pc):
                    inside = True
                    break
            if not inside:
                tris.append([ring[a], ring[b], ring[c]])
                idx.pop(k)
                break
        else:
            raise MeshError("ear clipping failed")
    tris.append([ring[i] for i in idx])
    return tris


def _in_triangle(p, a, b, c) -> bool:
    def cross(o, u, v):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])
    return cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0


def _crosses(nodes, ring, hole, p, q, ip, iq) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    for loop in (ring, hole):
        for k in range(len(loop)):
            a, b = loop[k], loop[(k + 1) % len(loop)]
            if len({a, b} & {ip, iq}):
                continue
            A, B = nodes[a], nodes[b]
            if (orient(p, q, A) * orient(p, q, B) < 0) and (orient(A, B, p) * orient(A, B, q) < 0):
                return True
    return False


def export_mesh_vtk(path, mesh: PolygonalMesh, bundle: ResultBundle | None = None) -> None:
    """VEM mesh export: polygons, with multi-loop elements split into triangles."""
    cells, types, owner = [], [], []
    for e, el in enumerate(mesh.elements):
        if len(el.loops) == 1:
            cells.append(el.loops[0].tolist())
            types.append(VTK_POLYGON)
            owner.append(e)
        else:
            for tri in _triangulate_with_holes(mesh.nodes, el.loops):
                cells.append(tri)
                types.append(VTK_TRIANGLE)
                owner.append(e)
    owner = np.array(owner, dtype=int)
    point_data = cell_data = None
    if bundle is not None:
        bundle.check(mesh.n_nodes, mesh.n_elements)
        point_data = {"displacement": bundle.displacements}
        if bundle.stress_location == "element" and len(bundle.stresses):
            s, p = bundle.stresses[owner], bundle.principal()[owner]
            cell_data = {"sigma_xx": s[:, 0], "sigma_yy": s[:, 1], "sigma_xy": s[:, 2],
                         "sigma_1": p[:, 0], "sigma_2": p[:, 1],
                         "phase_id": mesh.phase_ids[owner].astype(float),
                         "element_id": owner.astype(float)}
    write_vtk(path, mesh.nodes, cells, types, point_data, cell_data)


def export_lattice_vtk(path, cells: list, generators: np.ndarray,
                       bundle: ResultBundle | None = None) -> None:
    """Lattice export: one polygon per rigid cell plus a vertex cell at its generator.

    Each polygon has its own copy of the vertices, which carry the rigid-body
    displacement of that cell; the generator points carry the nodal values.
    """
    generators = np.asarray(generators, dtype=float).reshape(-1, 2)
    pts, conn, types = [], [], []
    offset = 0
    for ring in cells:
        ring = np.asarray(ring, dtype=float)
        pts.append(ring)
        conn.append(list(range(offset, offset + len(ring))))
        types.append(VTK_POLYGON)
        offset += len(ring)
    n_poly_pts = offset
    pts.append(generators)
    for k in range(len(generators)):
        conn.append([n_poly_pts + k])
        types.append(VTK_VERTEX)
    points = np.vstack(pts) if pts else np.zeros((0, 2))
    point_data = cell_data = None
    if bundle is not None:
        n = len(generators)
        bundle.check(n, n)
        rot = bundle.rotations if bundle.rotations is not None else np.zeros(n)
        disp = []
        for k, ring in enumerate(cells):
            r = np.asarray(ring, dtype=float) - generators[k]
            disp.append(bundle.displacements[k] + rot[k] * np.column_stack([-r[:, 1], r[:, 0]]))
        disp.append(bundle.displacements)
        sig = np.vstack([bundle.stresses, bundle.stresses])
        pr = np.vstack([bundle.principal(), bundle.principal()])
        point_data = {"displacement": np.vstack(disp)}
        cell_data = {"sigma_xx": sig[:, 0], "sigma_yy": sig[:, 1], "sigma_xy": sig[:, 2],
                     "sigma_1": pr[:, 0], "sigma_2": pr[:, 1],
                     "rotation": np.concatenate([rot, rot])}
    write_vtk(path, points, conn, types, point_data, cell_data)


# --------------------------------------------------------------------------- tables

def format_table(rows: list[dict], columns: list[str] | None = None) -> str:
    """Aligned plain-text table; floats in ``%.3e``."""
    if not rows:
        return ""
    columns = columns or list(dict.fromkeys(k for r in rows for k in r))

    def cell(v: Any) -> str:
        if isinstance(v, float) or isinstance(v, np.floating):
            return f"{float(v):.3e}"
        return "" if v is None else str(v)

    table = [[c for c in columns]] + [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_profile_csv(path, profile: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("r_over_b,sigma_rr,sigma_rr_exact\n")
        for r, s, e in np.asarray(profile).reshape(-1, 3):
            fh.write(f"{_fmt(r)},{_fmt(s)},{_fmt(e)}\n")
