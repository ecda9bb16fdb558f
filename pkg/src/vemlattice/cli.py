"""Command-line entry point: ``vemlattice {mesh,solve,bench,export,run}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__, bench
from . import io as vio
from .errors import (BoundaryError, ConfigError, MaterialError, MeshError, SolverError,
                     UnderConstrainedError, VemLatticeError)
from .materials import MaterialPhase
from .mesh import (DomainSpec, clipped_voronoi, generate_seeds, lattice_from_mesh,
                   single_inclusion_mesh, tessellation_to_mesh)
from .system import (BoundarySpec, apply_lattice_tractions, apply_tractions,
                     equilibrium_residual, reactions)

log = logging.getLogger("vemlattice")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MESH = 4
EXIT_SOLVE = 5
EXIT_IO = 6


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, BoundaryError, MaterialError)):
        return EXIT_CONFIG
    if isinstance(exc, MeshError):
        return EXIT_MESH
    if isinstance(exc, (UnderConstrainedError, SolverError)):
        return EXIT_SOLVE
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_ERROR


# --------------------------------------------------------------------------- helpers

def generate_mesh(spec: dict, rng_seed: int = 0):
    """Mesh from a ``mesh.generate`` mapping; returns ``(mesh, phases)``."""
    kind = spec.get("domain", "rectangle")
    spacing = float(spec.get("spacing", 0.1))
    seed = int(spec.get("rng_seed", rng_seed))
    if kind == "rectangle":
        domain = DomainSpec.rectangle(float(spec.get("width", 1.0)),
                                      float(spec.get("height", 1.0)))
    elif kind == "circle":
        from .mesh import chord_count
        r = float(spec.get("radius", 1.0))
        domain = DomainSpec.circle(r, int(spec.get("n_sides", chord_count(r, spacing))))
    elif kind == "bimaterial":
        problem = bench.BimaterialProblem(b=float(spec.get("radius", 1.0)))
        disc = bench.bimaterial_discretization(problem, spacing, seed)
        return disc.mesh, problem.phases
    elif kind == "porous":
        pc = bench.PorousConcrete(rng_seed=seed)
        disc = bench.three_phase_discretization(pc, spacing, seed)
        return disc.mesh, pc.phases
    elif kind == "septagon":
        return single_inclusion_mesh(), {}
    else:
        raise ConfigError(f"unknown domain {kind!r} "
                          "(rectangle, circle, bimaterial, porous, septagon)")
    tess = clipped_voronoi(generate_seeds(domain, spacing, seed), domain)
    return tessellation_to_mesh(tess), {}


def boundary_from_config(boundary: dict, points: np.ndarray, tag_nodes, dofs_per_node: int
                         ) -> BoundarySpec:
    spec = BoundarySpec()
    for item in boundary.get("dirichlet", []):
        if "tag" in item:
            nodes = np.asarray(tag_nodes(item["tag"]), dtype=int)
        else:
            nodes = np.asarray(item["nodes"], dtype=int)
        if len(nodes) == 0:
            raise BoundaryError(f"dirichlet entry {item} selects no nodes")
        if nodes.min() < 0 or nodes.max() >= len(points):
            raise BoundaryError(f"dirichlet entry {item} references a missing node")
        for comp, key in enumerate(("u", "v", "theta")):
            if key not in item:
                continue
            if comp == 2 and dofs_per_node < 3:
                raise BoundaryError("'theta' is only defined for the lattice model")
            vals = vio.compile_expression(item[key])(points[nodes, 0], points[nodes, 1])
            for n, val in zip(nodes, vals):
                spec.prescribe(n, comp, float(val))
    return spec


def _add_tractions(spec: BoundarySpec, mesh, boundary: dict) -> None:
    for item in boundary.get("tractions", []):
        tagged = set(mesh.tagged(item["tag"]).tolist())
        for a, b in mesh.boundary_edges():
            if a in tagged and b in tagged:
                spec.add_traction(a, b, item["t"])


def _solve_vem(mesh, phases, cfg, timings):
    spec = boundary_from_config(cfg.boundary, mesh.nodes, mesh.tagged, 2)
    _add_tractions(spec, mesh, cfg.boundary)
    t0 = time.perf_counter()
    system, mats = bench.assemble_vem(mesh, phases)
    system.f = apply_tractions(spec, mesh)
    d = bench.apply_dirichlet_and_solve(system, spec, **cfg.solver)
    timings["solve_vem"] = time.perf_counter() - t0
    sol = bench.VemSolution(mesh, phases, system, mats, spec, d)
    report = {"model": "VEM", "equilibrium": equilibrium_residual(system, d, spec),
              "reaction_sum": _reaction_sum(reactions(system, d, spec))}
    return vio.ResultBundle("vem", sol.displacements(), sol.stresses(), "element",
                            reports=[report])


def _solve_vclm(mesh, phases, cfg, timings):
    lattice = lattice_from_mesh(mesh)
    lattice = bench.assign_springs(lattice, bench.spring_calibrations(phases))
    spec = boundary_from_config(cfg.boundary, lattice.points, lattice.boundary_nodes, 3)
    _add_tractions(spec, mesh, cfg.boundary)
    t0 = time.perf_counter()
    sol = bench.solve_lattice(lattice, spec, f=apply_lattice_tractions(spec, mesh, lattice.points),
                              **cfg.solver)
    timings["solve_vclm"] = time.perf_counter() - t0
    report = {"model": "VCLM", "equilibrium": sol.equilibrium(),
              "reaction_sum": _reaction_sum(reactions(sol.system, sol.d, spec))}
    return vio.ResultBundle("vclm", sol.displacements(), sol.stresses(), "node",
                            rotations=sol.d[2::3], reports=[report]), lattice


def _reaction_sum(reac: dict) -> list:
    return [float(sum(v for (n, c), v in reac.items() if c == k)) for k in (0, 1)]


def run_solve(cfg, out_bundle: str | None, out_vtk: str | None) -> list:
    timings: dict = {}
    t0 = time.perf_counter()
    if "file" in cfg.mesh:
        mesh, file_phases = vio.read_mesh(cfg.resolve(cfg.mesh["file"]))
    else:
        mesh, file_phases = generate_mesh(cfg.mesh["generate"], cfg.rng_seed)
    phases = {**file_phases, **cfg.phases}
    vio.validate_phases(mesh, phases)
    timings["mesh"] = time.perf_counter() - t0
    meta = {"mesh_hash": vio.mesh_hash(mesh), "config_hash": cfg.hash, "version": __version__,
            "n_nodes": mesh.n_nodes, "n_elements": mesh.n_elements}
    models = ("vem", "vclm") if cfg.model == "both" else (cfg.model,)
    bundles = []
    for model in models:
        if model == "vem":
            b = _solve_vem(mesh, phases, cfg, timings)
            lattice = None
        else:
            b, lattice = _solve_vclm(mesh, phases, cfg, timings)
        b.metadata = {**meta, "timings": dict(timings)}
        bundles.append(b)
        suffix = "" if len(models) == 1 else f".{model}"
        if out_bundle:
            b.write(_suffixed(out_bundle, suffix))
        if out_vtk:
            path = _suffixed(out_vtk, suffix)
            if lattice is None:
                vio.export_mesh_vtk(path, mesh, b)
            else:
                vio.export_lattice_vtk(path, lattice.cells, lattice.points, b)
        print(vio.format_table(b.reports))
    return bundles


def _suffixed(path: str, suffix: str) -> str:
    if not suffix:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}{suffix}{ext}"


def _emit(rows: list[dict], args, columns=None) -> None:
    print(vio.format_table(rows, columns))
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
            fh.write("\n")


# --------------------------------------------------------------------------- subcommands

def cmd_mesh(args) -> int:
    spec = {"domain": args.domain, "spacing": args.spacing, "width": args.width,
            "height": args.height, "radius": args.radius}
    mesh, phases = generate_mesh(spec, args.seed)
    vio.write_mesh(args.out, mesh, phases)
    print(f"wrote {args.out}: {mesh.n_nodes} nodes, {mesh.n_elements} elements")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = vio.parse_config(args.config)
    if cfg.command != "solve":
        cfg.command = "solve"
    if args.model:
        cfg.model = args.model
    bundle, vtk = (cfg.output.get(k) for k in ("bundle", "vtk"))
    run_solve(cfg, args.out or (bundle and cfg.resolve(bundle)), args.vtk or (vtk and cfg.resolve(vtk)))
    return EXIT_OK


def cmd_bench_patch(args) -> int:
    phase = MaterialPhase(args.E, args.nu)
    meshes = []
    names = ["coarse", "fine", "septagon"] if args.mesh == "all" else [args.mesh]
    for name in names:
        if name == "septagon":
            meshes.append(bench.Discretization("septagon", None, single_inclusion_mesh(), None))
        else:
            meshes.append(bench.patch_discretization(bench.PATCH_MESHES[name], args.seed, name))
    rows = []
    models = ["vem", "vclm"] if args.model == "both" else [args.model]
    for disc in meshes:
        for model in models:
            if model == "vclm" and disc.lattice is None:
                continue
            springs = ["equal", "calibrated"] if args.springs == "both" else [args.springs]
            for s in (springs if model == "vclm" else ["calibrated"]):
                rows.append(bench.run_patch_test(disc, model, phase, s).row())
    _emit(rows, args, ["model", "mesh", "rel_l2", "abs_l2", "stress_error", "equilibrium"])
    return EXIT_OK


def cmd_bench_inclusion(args) -> int:
    problem = bench.BimaterialProblem(a=args.a, b=args.b, eta=args.eta, nu=args.nu)
    models = ("vem", "vclm") if args.model == "both" else (args.model,)
    res = bench.run_inclusion_benchmark(problem, args.spacing, args.seed, models,
                                        single_element=args.single_element)
    rows = [r.row() for r in res.reports]
    for model, (s, ex, err) in res.center_stress.items():
        rows[0]["sigma_rr_center"] = float(s)
        rows[0]["center_rel_error"] = float(err)
    _emit(rows, args)
    if args.csv:
        for model, prof in res.profiles.items():
            path = _suffixed(args.csv, "" if len(res.profiles) == 1 else f".{model}")
            vio.write_profile_csv(path, prof)
    return EXIT_OK


def cmd_bench_threephase(args) -> int:
    spec = bench.PorousConcrete(rng_seed=args.seed)
    models = ("vem", "vclm") if args.model == "both" else (args.model,)
    res = bench.run_three_phase(spec, args.strain, args.spacing, args.seed, models)
    rows = []
    for model in models:
        top, bot, imbalance = res.reaction_balance[model]
        rows.append({"model": model.upper(), "cells": res.disc.mesh.n_elements,
                     "reaction_top": top, "reaction_bottom": bot, "imbalance": imbalance,
                     "compressive_fraction": res.compressive_fraction[model],
                     "min_sigma_2": float(res.minor_principal[model].min())})
    _emit(rows, args)
    if args.vtk:
        for model in models:
            sol = res.solutions[model]
            path = _suffixed(args.vtk, f".{model}")
            if model == "vem":
                b = vio.ResultBundle("vem", sol.displacements(), sol.stresses(), "element")
                vio.export_mesh_vtk(path, sol.mesh, b)
            else:
                b = vio.ResultBundle("vclm", sol.displacements(), sol.stresses(), "node",
                                     rotations=sol.d[2::3])
                vio.export_lattice_vtk(path, sol.lattice.cells, sol.lattice.points, b)
    return EXIT_OK


def cmd_export(args) -> int:
    bundle = vio.ResultBundle.read(args.bundle)
    mesh, _ = vio.read_mesh(args.mesh)
    if bundle.model == "vem":
        vio.export_mesh_vtk(args.out, mesh, bundle)
    else:
        lattice = lattice_from_mesh(mesh)
        vio.export_lattice_vtk(args.out, lattice.cells, lattice.points, bundle)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    """Dispatch on the ``command`` field of a config file."""
    cfg = vio.parse_config(args.config)
    out = {k: cfg.resolve(v) for k, v in cfg.output.items() if isinstance(v, str)}
    if cfg.command == "solve":
        run_solve(cfg, out.get("bundle"), out.get("vtk"))
        return EXIT_OK
    if cfg.command == "bench":
        o = cfg.options
        ns = argparse.Namespace(model=cfg.model, seed=cfg.rng_seed, json=out.get("report"),
                                csv=out.get("csv"), vtk=out.get("vtk"))
        if cfg.benchmark == "patch":
            ns.mesh, ns.springs = o.get("mesh", "all"), o.get("springs", "both")
            ns.E, ns.nu = float(o.get("E", 1.0)), float(o.get("nu", 0.3))
            return cmd_bench_patch(ns)
        if cfg.benchmark == "inclusion":
            ns.a, ns.b = float(o.get("a", 0.25)), float(o.get("b", 1.0))
            ns.eta, ns.nu = float(o.get("eta", 10.0)), float(o.get("nu", 0.3))
            ns.spacing = float(o.get("spacing", 0.056))
            ns.single_element = bool(o.get("single_element", False))
            return cmd_bench_inclusion(ns)
        ns.spacing, ns.strain = float(o.get("spacing", 0.09)), float(o.get("strain", -1e-3))
        return cmd_bench_threephase(ns)
    raise ConfigError(f"command {cfg.command!r} is not runnable from a config file; "
                      "use the subcommand directly")


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vemlattice",
                                description="Virtual element and Voronoi-cell lattice solver")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate a mesh file")
    m.add_argument("--domain", default="rectangle",
                   choices=["rectangle", "circle", "bimaterial", "porous", "septagon"])
    m.add_argument("--spacing", type=float, default=0.1)
    m.add_argument("--width", type=float, default=1.0)
    m.add_argument("--height", type=float, default=1.0)
    m.add_argument("--radius", type=float, default=1.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("-o", "--out", required=True)
    m.set_defaults(func=cmd_mesh)

    s = sub.add_parser("solve", help="solve a configured problem")
    s.add_argument("config")
    s.add_argument("--model", choices=["vem", "vclm", "both"])
    s.add_argument("-o", "--out", help="result bundle (JSON)")
    s.add_argument("--vtk", help="legacy VTK output")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark")
    bsub = b.add_subparsers(dest="benchmark", required=True)
    bp = bsub.add_parser("patch")
    bp.add_argument("--model", default="both", choices=["vem", "vclm", "both"])
    bp.add_argument("--mesh", default="all", choices=["coarse", "fine", "septagon", "all"])
    bp.add_argument("--springs", default="both", choices=["equal", "calibrated", "both"])
    bp.add_argument("--E", type=float, default=1.0)
    bp.add_argument("--nu", type=float, default=0.3)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--json")
    bp.set_defaults(func=cmd_bench_patch)
    bi = bsub.add_parser("inclusion")
    bi.add_argument("--eta", type=float, default=10.0)
    bi.add_argument("--a", type=float, default=0.25)
    bi.add_argument("--b", type=float, default=1.0)
    bi.add_argument("--nu", type=float, default=0.3)
    bi.add_argument("--model", default="both", choices=["vem", "vclm", "both"])
    bi.add_argument("--spacing", type=float, default=0.056)
    bi.add_argument("--seed", type=int, default=0)
    bi.add_argument("--single-element", action="store_true")
    bi.add_argument("--csv", help="radial stress profile output")
    bi.add_argument("--json")
    bi.set_defaults(func=cmd_bench_inclusion)
    bt = bsub.add_parser("threephase")
    bt.add_argument("--model", default="both", choices=["vem", "vclm", "both"])
    bt.add_argument("--spacing", type=float, default=0.09)
    bt.add_argument("--strain", type=float, default=-1e-3)
    bt.add_argument("--seed", type=int, default=0)
    bt.add_argument("--vtk", help="VTK output prefix")
    bt.add_argument("--json")
    bt.set_defaults(func=cmd_bench_threephase)

    e = sub.add_parser("export", help="write a result bundle as legacy VTK")
    e.add_argument("bundle")
    e.add_argument("--mesh", required=True)
    e.add_argument("-o", "--out", required=True)
    e.set_defaults(func=cmd_export)

    r = sub.add_parser("run", help="run whatever a config file describes")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (VemLatticeError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"vemlattice: error: {msg}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
