"""Benchmarks: displacement patch test, circular bimaterial, porous three-phase composite."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import MeshError
from .geometry import points_in_polygon, ring_distance
from .materials import (PLANE_STRAIN, PLANE_STRESS, MaterialPhase, constitutive_matrix,
                        lame_parameters)
from .mesh import (DomainSpec, PolygonalMesh, VoronoiTessellation, chord_count, clipped_voronoi,
                   edge_components, extract_lattice, generate_seeds, interface_pairs,
                   merge_phase, regular_polygon, submesh, tessellation_to_mesh)
from .system import (BoundarySpec, GlobalSystem, apply_dirichlet_and_solve, assemble_lattice,
                     assemble_vem, element_dofs, equilibrium_residual, free_residual, reactions)
from .vclm import (LatticeModel, assign_springs, calibrate_springs, equal_springs, nodal_stress,
                   symmetric_voigt)
from .vem import element_stress, monomial_values, principal_stresses

log = logging.getLogger(__name__)

# 3-point, degree-2 triangle rule: barycentric points and weights (sum to 1)
TRI_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
TRI_W = np.full(3, 1 / 3)


def patch_field(points: np.ndarray) -> np.ndarray:
    """Affine patch-test field ``u = 1 + x + y``, ``v = 2 - 3x - 4y``."""
    p = np.atleast_2d(points)
    return np.column_stack([1.0 + p[:, 0] + p[:, 1], 2.0 - 3.0 * p[:, 0] - 4.0 * p[:, 1]])


PATCH_STRAIN = np.array([1.0, -4.0, -2.0])   # (exx, eyy, gxy) of patch_field
PATCH_ROTATION = -2.0                        # (dv/dx - du/dy) / 2 of patch_field


# --------------------------------------------------------------------------- exact solution

@dataclass(frozen=True)
class BimaterialProblem:
    """Disk inclusion (phase 1) of radius ``a`` in a matrix disk (phase 2) of radius ``b``.

    Loaded by a radial displacement equal to ``b`` on ``r = b``; plane strain.
    """

    a: float = 0.25
    b: float = 1.0
    eta: float = 10.0
    nu: float = 0.3
    E_matrix: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise ValueError("need 0 < a < b")

    @property
    def inclusion(self) -> MaterialPhase:
        return MaterialPhase(self.eta * self.E_matrix, self.nu, PLANE_STRAIN)

    @property
    def matrix(self) -> MaterialPhase:
        return MaterialPhase(self.E_matrix, self.nu, PLANE_STRAIN)

    @property
    def phases(self) -> dict:
        return {1: self.inclusion, 2: self.matrix}

    @property
    def alpha(self) -> float:
        l1, l2 = lame_parameters(self.inclusion), lame_parameters(self.matrix)
        a2, b2 = self.a ** 2, self.b ** 2
        return ((l1.lam + l1.mu + l2.mu) * b2
                / ((l2.lam + l2.mu) * a2 + (l1.lam + l1.mu) * (b2 - a2) + l2.mu * b2))

    def displacement(self, r, branch: str | None = None) -> np.ndarray:
        """Radial displacement ``u_r(r)``; ``branch`` forces 'inclusion' or 'matrix'."""
        r = np.asarray(r, dtype=float)
        if np.any(r > self.b * (1 + 1e-12)) or np.any(r < 0):
            raise ValueError("radius outside [0, b]")
        al, a2, b2 = self.alpha, self.a ** 2, self.b ** 2
        inner = ((1.0 - b2 / a2) * al + b2 / a2) * r
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = (r - b2 / r) * al + b2 / r
        if branch == "inclusion":
            return inner
        if branch == "matrix":
            return outer
        return np.where(r <= self.a, inner, outer)

    def strains(self, r, branch: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(eps_rr, eps_tt)``; finite at r = 0 where the inclusion strain is uniform."""
        r = np.asarray(r, dtype=float)
        al, a2, b2 = self.alpha, self.a ** 2, self.b ** 2
        k_in = (1.0 - b2 / a2) * al + b2 / a2
        with np.errstate(divide="ignore", invalid="ignore"):
            err_out = al + (1.0 - al) * (-b2 / r ** 2)
            ett_out = al + (1.0 - al) * (b2 / r ** 2)
        inside = (r <= self.a) if branch is None else np.full(r.shape, branch == "inclusion")
        err = np.where(inside, k_in, err_out)
        ett = np.where(inside, k_in, ett_out)
        return err, ett

    def stress(self, r, branch: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(sigma_rr, sigma_tt)`` from the phase's Lame constants."""
        r = np.asarray(r, dtype=float)
        err, ett = self.strains(r, branch)
        l1, l2 = lame_parameters(self.inclusion), lame_parameters(self.matrix)
        inside = (r <= self.a) if branch is None else np.full(r.shape, branch == "inclusion")
        lam = np.where(inside, l1.lam, l2.lam)
        mu = np.where(inside, l1.mu, l2.mu)
        srr = 2.0 * mu * err + lam * (err + ett)
        stt = 2.0 * mu * ett + lam * (err + ett)
        return srr, stt

    def displacement_field(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        r = np.linalg.norm(p, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, self.displacement(np.minimum(r, self.b)) / r,
                             self.strains(np.zeros(1))[0][0])
        return p * scale[:, None]


# --------------------------------------------------------------------------- error norms

@dataclass
class ErrorReport:
    model: str
    mesh: str
    abs_l2: float
    rel_l2: float
    stress_error: float | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {"model": self.model, "mesh": self.mesh, "abs_l2": self.abs_l2,
               "rel_l2": self.rel_l2}
        if self.stress_error is not None:
            out["stress_error"] = self.stress_error
        out.update(self.extra)
        return out


def fan_quadrature(loops: list) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points/weights on a polygon from a centroid fan of signed triangles.

    Every loop (holes included) is fanned about the same point; clockwise
    loops give negative weights, so the rule integrates over the polygon with
    holes removed.
    """
    allpts = np.concatenate(loops)
    c = allpts.mean(axis=0)
    pts, wts = [], []
    for ring in loops:
        nxt = np.roll(ring, -1, axis=0)
        area = 0.5 * ((ring[:, 0] - c[0]) * (nxt[:, 1] - c[1])
                      - (nxt[:, 0] - c[0]) * (ring[:, 1] - c[1]))
        for bary, w in zip(TRI_BARY, TRI_W):
            pts.append(bary[0] * c + bary[1] * ring + bary[2] * nxt)
            wts.append(w * area)
    return np.concatenate(pts), np.concatenate(wts)


def vem_l2_error(mesh: PolygonalMesh, mats: list, d: np.ndarray,
                 exact: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """Absolute and relative L2 error of the projected VEM displacement."""
    err2 = ref2 = 0.0
    for e, el in enumerate(mesh.elements):
        pts, w = fan_quadrature(mesh.element_coords(e))
        m = mats[e]
        uh = monomial_values(pts, m.centroid, m.diameter) @ (m.Pi @ d[element_dofs(el.vertices)])
        ue = exact(pts)
        err2 += float(w @ np.sum((uh - ue) ** 2, axis=1))
        ref2 += float(w @ np.sum(ue ** 2, axis=1))
    err = math.sqrt(max(err2, 0.0))
    return err, err / math.sqrt(ref2)


def lattice_l2_error(lattice: LatticeModel, d: np.ndarray,
                     exact: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """Cell-volume-weighted discrete L2 error at the generator points."""
    uh = d.reshape(-1, 3)[:, :2]
    ue = exact(lattice.points)
    V = lattice.volumes
    err = math.sqrt(float(V @ np.sum((uh - ue) ** 2, axis=1)))
    ref = math.sqrt(float(V @ np.sum(ue ** 2, axis=1)))
    return err, err / ref


# --------------------------------------------------------------------------- solvers

@dataclass
class VemSolution:
    mesh: PolygonalMesh
    phases: dict
    system: GlobalSystem
    mats: list
    bc: BoundarySpec
    d: np.ndarray

    def displacements(self) -> np.ndarray:
        return self.d.reshape(-1, 2)

    def stresses(self) -> np.ndarray:
        """Per-element Voigt stress ``(sxx, syy, sxy)``."""
        out = np.zeros((self.mesh.n_elements, 3))
        for e, el in enumerate(self.mesh.elements):
            C = constitutive_matrix(self.phases[el.phase_id])
            out[e] = element_stress(self.mats[e], C, self.d[element_dofs(el.vertices)]).sigma
        return out

    def equilibrium(self) -> float:
        return max(equilibrium_residual(self.system, self.d, self.bc),
                   free_residual(self.system, self.d, self.bc))


@dataclass
class LatticeSolution:
    lattice: LatticeModel
    system: GlobalSystem
    bc: BoundarySpec
    d: np.ndarray

    def displacements(self) -> np.ndarray:
        return self.d.reshape(-1, 3)[:, :2]

    def nodal_stress(self) -> np.ndarray:
        return nodal_stress(self.lattice, self.d)

    def stresses(self) -> np.ndarray:
        return symmetric_voigt(self.nodal_stress())

    def equilibrium(self) -> float:
        return max(equilibrium_residual(self.system, self.d, self.bc),
                   free_residual(self.system, self.d, self.bc))


def solve_vem(mesh: PolygonalMesh, phases: dict, bc: BoundarySpec, **solver) -> VemSolution:
    system, mats = assemble_vem(mesh, phases)
    d = apply_dirichlet_and_solve(system, bc, **solver)
    return VemSolution(mesh, phases, system, mats, bc, d)


def solve_lattice(lattice: LatticeModel, bc: BoundarySpec, f: np.ndarray | None = None,
                  **solver) -> LatticeSolution:
    system = assemble_lattice(lattice)
    if f is not None:
        system.f = np.asarray(f, dtype=float)
    d = apply_dirichlet_and_solve(system, bc, **solver)
    return LatticeSolution(lattice, system, bc, d)


def spring_calibrations(phases: dict, springs: str = "calibrated") -> dict:
    if springs == "equal":
        return {k: equal_springs(p.E) for k, p in phases.items()}
    if springs == "calibrated":
        return {k: calibrate_springs(p.E, p.nu) for k, p in phases.items()}
    raise ValueError(f"unknown spring mode {springs!r}")


# --------------------------------------------------------------------------- discretizations

@dataclass
class Discretization:
    """Voronoi tessellation with its polygonal mesh and dual lattice."""

    name: str
    tess: VoronoiTessellation | None
    mesh: PolygonalMesh
    lattice: LatticeModel | None
    classifier: Callable | None = None


def discretize(name: str, tess: VoronoiTessellation, classifier=None) -> Discretization:
    mesh = tessellation_to_mesh(tess, classifier)
    lattice = extract_lattice(tess, classifier)
    return Discretization(name, tess, mesh, lattice, classifier)


def patch_discretization(spacing: float, rng_seed: int = 0, name: str | None = None
                         ) -> Discretization:
    domain = DomainSpec.rectangle()
    seeds = generate_seeds(domain, spacing, rng_seed)
    return discretize(name or f"voronoi-h{spacing:g}", clipped_voronoi(seeds, domain))


PATCH_MESHES = {"coarse": 0.2, "fine": 0.08}


def bimaterial_discretization(problem: BimaterialProblem, spacing: float, rng_seed: int = 0,
                              offset_ratio: float = 0.15) -> Discretization:
    """Interface-conforming Voronoi discretization of the circular bimaterial.

    The inclusion boundary is an inscribed polygon reproduced exactly by
    mirrored seed pairs; the outer circle is an inscribed polygon lined with a
    row of seeds just inside it.
    """
    n_b = chord_count(problem.b, spacing)
    n_a = chord_count(problem.a, spacing)
    domain = DomainSpec.circle(problem.b, n_b)
    interface = regular_polygon((0.0, 0.0), problem.a, n_a)
    chord_a = 2.0 * problem.a * math.sin(math.pi / n_a)
    chord_b = 2.0 * problem.b * math.sin(math.pi / n_b)
    fixed = np.vstack([interface_pairs(interface, offset_ratio * chord_a),
                       interface_pairs(domain.outer, offset_ratio * chord_b, sides="inner")])

    def keep_out(p):
        return ((ring_distance(p, interface) < 0.75 * chord_a)
                | (ring_distance(p, domain.outer) < 0.75 * chord_b))

    seeds = generate_seeds(domain, spacing, rng_seed, fixed=fixed, keep_out=keep_out)

    def classifier(p):
        return np.where(points_in_polygon(p, interface), 1, 2)

    disc = discretize(f"bimaterial-h{spacing:g}", clipped_voronoi(seeds, domain), classifier)
    cen_phase = classifier(disc.mesh.centroids)
    if np.any(cen_phase != disc.mesh.phase_ids):
        raise MeshError("interface is not resolved: some element straddles r = a")
    return disc


# --------------------------------------------------------------------------- patch test

def run_patch_test(disc: Discretization, model: str = "vem",
                   phase: MaterialPhase = MaterialPhase(1.0, 0.3),
                   springs: str = "calibrated", amplitude: float = 1.0, **solver
                   ) -> ErrorReport:
    """Impose ``amplitude * patch_field`` on the boundary and measure the errors.

    VEM: field on boundary nodes. Lattice: translation and rotation of the
    field at the generator points of cells touching the boundary. The stress error is the
    largest relative deviation from the constant stress of the imposed strain;
    for the lattice it is checked at interior nodes against the stress the
    lattice represents (nu = 0 for equal springs).
    """
    def exact(p):
        return amplitude * patch_field(p)

    if model == "vem":
        mesh = disc.mesh
        phases = {pid: phase for pid in set(mesh.phase_ids.tolist())}
        bc = BoundarySpec()
        bc.prescribe_field(mesh.boundary_nodes(), mesh.nodes, exact)
        sol = solve_vem(mesh, phases, bc, **solver)
        ab, rel = vem_l2_error(mesh, sol.mats, sol.d, exact)
        target = constitutive_matrix(phase) @ (amplitude * PATCH_STRAIN)
        serr = float(np.abs(sol.stresses() - target).max() / np.abs(target).max())
        return ErrorReport("VEM", disc.name, ab, rel, serr, {"equilibrium": sol.equilibrium()})

    if model != "vclm":
        raise ValueError(f"unknown model {model!r}")
    lattice = assign_springs(disc.lattice, spring_calibrations(
        {pid: phase for pid in set(disc.lattice.phase.tolist())}, springs))
    bc = BoundarySpec()
    boundary = lattice.boundary_nodes()
    bc.prescribe_field(boundary, lattice.points, exact)
    for node in boundary:
        bc.prescribe(node, 2, amplitude * PATCH_ROTATION)
    sol = solve_lattice(lattice, bc, **solver)
    ab, rel = lattice_l2_error(lattice, sol.d, exact)
    interior = np.setdiff1d(np.arange(lattice.n_nodes), lattice.boundary_nodes())
    if springs == "equal":
        target_phase = MaterialPhase(phase.E, 0.0, PLANE_STRESS)
    else:
        target_phase = phase.with_mode(PLANE_STRESS)
    target = constitutive_matrix(target_phase) @ (amplitude * PATCH_STRAIN)
    serr = None
    if len(interior):
        serr = float(np.abs(sol.stresses()[interior] - target).max() / np.abs(target).max())
    label = "VCLM (kn = kt)" if springs == "equal" else "VCLM (kn != kt)"
    return ErrorReport(label, disc.name, ab, rel, serr, {"equilibrium": sol.equilibrium()})


# --------------------------------------------------------------------------- bimaterial

def radial_stress(points: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``e_r . sigma . e_r`` at points; the mean normal stress at the origin."""
    p = np.atleast_2d(points)
    r = np.linalg.norm(p, axis=1)
    safe = np.where(r > 0, r, 1.0)
    c, s = p[:, 0] / safe, p[:, 1] / safe
    srr = c * c * sigma[:, 0] + s * s * sigma[:, 1] + 2 * c * s * sigma[:, 2]
    scale = np.linalg.norm(p, axis=1).max(initial=0.0)
    at_origin = r <= 1e-9 * max(scale, 1.0)
    return np.where(at_origin, 0.5 * (sigma[:, 0] + sigma[:, 1]), srr)


@dataclass
class InclusionResult:
    problem: BimaterialProblem
    reports: list
    profiles: dict                # model -> array (n, 3): r/b, sigma_rr, exact sigma_rr
    solutions: dict
    center_stress: dict = field(default_factory=dict)


def _profile(problem: BimaterialProblem, points: np.ndarray, sigma: np.ndarray,
             phase_ids: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(points, axis=1)
    srr = radial_stress(points, sigma)
    branch = np.where(phase_ids == 1, "inclusion", "matrix")
    exact = np.array([problem.stress(min(ri, problem.b), br)[0] for ri, br in zip(r, branch)],
                     dtype=float)
    order = np.argsort(r, kind="stable")
    return np.column_stack([r / problem.b, srr, exact])[order]


def run_inclusion_benchmark(problem: BimaterialProblem, spacing: float = 0.056,
                            rng_seed: int = 0, models=("vem", "vclm"),
                            single_element: bool = False, disc: Discretization | None = None,
                            **solver) -> InclusionResult:
    """Solve the bimaterial problem and compare with the exact solution.

    With ``single_element`` the inclusion is fused into one polygonal virtual
    element (VEM only) and its constant stress is reported at r = 0.
    """
    disc = disc or bimaterial_discretization(problem, spacing, rng_seed)
    reports, profiles, solutions, center = [], {}, {}, {}
    exact = problem.displacement_field

    def radial(p):
        return np.asarray(p, dtype=float)

    if "vem" in models:
        mesh = merge_phase(disc.mesh, 1) if single_element else disc.mesh
        bc = BoundarySpec()
        bc.prescribe_field(mesh.tagged("outer"), mesh.nodes, radial)
        sol = solve_vem(mesh, problem.phases, bc, **solver)
        ab, rel = vem_l2_error(mesh, sol.mats, sol.d, exact)
        tag = "VEM (single-element inclusion)" if single_element else "VEM"
        reports.append(ErrorReport(tag, disc.name, ab, rel, None,
                                   {"eta": problem.eta, "equilibrium": sol.equilibrium()}))
        sig = sol.stresses()
        profiles["vem"] = _profile(problem, mesh.centroids, sig, mesh.phase_ids)
        solutions["vem"] = sol
        if single_element:
            k = int(np.flatnonzero(mesh.phase_ids == 1)[0])
            s = radial_stress(np.zeros((1, 2)), sig[k:k + 1])[0]
            ex = float(problem.stress(np.zeros(1))[0][0])
            center["vem"] = (s, ex, abs(s - ex) / abs(ex))

    if "vclm" in models and not single_element:
        lattice = assign_springs(disc.lattice, spring_calibrations(problem.phases))
        bc = BoundarySpec()
        boundary = lattice.boundary_nodes()
        bc.prescribe_field(boundary, lattice.points, radial)
        for node in boundary:
            bc.prescribe(node, 2, 0.0)      # the radial field is irrotational
        sol = solve_lattice(lattice, bc, **solver)
        ab, rel = lattice_l2_error(lattice, sol.d, exact)
        reports.append(ErrorReport("VCLM", disc.name, ab, rel, None,
                                   {"eta": problem.eta, "equilibrium": sol.equilibrium()}))
        profiles["vclm"] = _profile(problem, lattice.points, sol.stresses(), lattice.phase)
        solutions["vclm"] = sol
    return InclusionResult(problem, reports, profiles, solutions, center)


def convergence_study(problem: BimaterialProblem, spacings=(0.1, 0.05, 0.025),
                      rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray, float]:
    """VEM relative L2 errors over a sequence of spacings and the fitted order."""
    errs = []
    for h in spacings:
        res = run_inclusion_benchmark(problem, h, rng_seed, models=("vem",))
        errs.append(res.reports[0].rel_l2)
    h, e = np.asarray(spacings, float), np.asarray(errs)
    order = float(np.polyfit(np.log(h), np.log(e), 1)[0])
    return h, e, order


# --------------------------------------------------------------------------- three-phase

@dataclass(frozen=True)
class PorousConcrete:
    """Hexagonal packing of coated aggregates; the uncoated remainder is void.

    Aggregates (phase 1) are strictly inside the box; their paste coatings
    (phase 2) overlap their neighbours and may cross the box faces, which
    gives load paths from the top face to the bottom face.
    """

    n_cols: int = 5
    n_rows: int = 5
    pitch: float = 1.0
    radius: float = 0.34
    coating: float = 0.18
    jitter: float = 0.02
    modular_ratio: float = 3.0
    nu: float = 0.2
    E_paste: float = 1.0
    rng_seed: int = 0

    def layout(self):
        rng = np.random.default_rng(self.rng_seed)
        dy = self.pitch * math.sqrt(3.0) / 2.0
        y0 = self.radius + 0.5 * self.coating
        width = self.n_cols * self.pitch
        height = (self.n_rows - 1) * dy + 2.0 * y0
        centers, radii = [], []
        for row in range(self.n_rows):
            shift = 0.5 * self.pitch if row % 2 == 0 else self.pitch
            count = self.n_cols if row % 2 == 0 else self.n_cols - 1
            for col in range(count):
                c = np.array([shift + col * self.pitch, y0 + row * dy])
                c += rng.uniform(-self.jitter, self.jitter, 2)
                c[1] = min(max(c[1], y0), height - y0)
                centers.append(c)
                radii.append(self.radius * rng.uniform(0.95, 1.0))
        return width, height, np.array(centers), np.array(radii)

    @property
    def phases(self) -> dict:
        return {1: MaterialPhase(self.modular_ratio * self.E_paste, self.nu, PLANE_STRESS),
                2: MaterialPhase(self.E_paste, self.nu, PLANE_STRESS)}


def three_phase_discretization(spec: PorousConcrete, spacing: float, rng_seed: int = 0,
                               offset_ratio: float = 0.15) -> Discretization:
    width, height, centers, radii = spec.layout()
    domain = DomainSpec.rectangle(width, height)
    rings, fixed, chords = [], [], []
    for c, r in zip(centers, radii):
        n = chord_count(r, spacing)
        ring = regular_polygon(c, r, n)
        chord = 2.0 * r * math.sin(math.pi / n)
        rings.append(ring)
        chords.append(chord)
        fixed.append(interface_pairs(ring, offset_ratio * chord))
    fixed = np.vstack(fixed)

    def keep_out(p):
        out = np.zeros(len(p), dtype=bool)
        for ring, chord in zip(rings, chords):
            out |= ring_distance(p, ring) < 0.75 * chord
        return out

    seeds = generate_seeds(domain, spacing, rng_seed, fixed=fixed, keep_out=keep_out)

    def classifier(p):
        p = np.atleast_2d(p)
        phase = np.full(len(p), -1, dtype=int)
        dist = np.linalg.norm(p[:, None, :] - centers[None, :, :], axis=2)
        phase[np.any(dist <= (radii + spec.coating)[None, :], axis=1)] = 2
        for ring in rings:
            phase[points_in_polygon(p, ring)] = 1
        return phase

    tess = clipped_voronoi(seeds, domain)
    mesh = tessellation_to_mesh(tess, classifier)
    labels = edge_components(mesh)
    top, bottom = set(mesh.tagged("top").tolist()), set(mesh.tagged("bottom").tolist())
    best, best_size = None, 0
    for comp in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == comp)
        nodes = set(np.concatenate([mesh.elements[e].vertices for e in members]).tolist())
        if nodes & top and nodes & bottom and len(members) > best_size:
            best, best_size = comp, len(members)
    if best is None:
        raise MeshError("no connected load path between the top and bottom faces")
    mesh = submesh(mesh, labels == best)
    kept = np.zeros(tess.n_cells, dtype=bool)
    kept[mesh.cell_ids] = True

    def solid_classifier(p):
        phase = classifier(p)
        return np.where(kept, phase, -1) if len(p) == tess.n_cells else phase

    lattice = extract_lattice(tess, solid_classifier)
    return Discretization(f"porous-h{spacing:g}", tess, mesh, lattice, solid_classifier)


@dataclass
class ThreePhaseResult:
    spec: PorousConcrete
    disc: Discretization
    solutions: dict
    minor_principal: dict
    reaction_balance: dict
    compressive_fraction: dict
    timings: dict


def load_path(stress: np.ndarray) -> np.ndarray:
    """Mask of the more heavily stressed half of the elements (by stress norm)."""
    mag = np.sqrt(stress[:, 0] ** 2 + stress[:, 1] ** 2 + 2 * stress[:, 2] ** 2)
    return mag >= np.median(mag)


def minor_principal(stress: np.ndarray) -> np.ndarray:
    return np.array([principal_stresses(s)[0][1] for s in stress])


def _reaction_balance(reac: dict, top_nodes, bottom_nodes) -> tuple[float, float, float]:
    top = sum(v for (n, c), v in reac.items() if c == 1 and n in top_nodes)
    bot = sum(v for (n, c), v in reac.items() if c == 1 and n in bottom_nodes)
    scale = max(abs(top), abs(bot), 1e-300)
    return top, bot, abs(top + bot) / scale


def run_three_phase(spec: PorousConcrete = PorousConcrete(), applied_strain: float = -1e-3,
                    spacing: float = 0.09, rng_seed: int = 0, models=("vem", "vclm"),
                    disc: Discretization | None = None, **solver) -> ThreePhaseResult:
    """Compress the porous composite by a uniform top displacement.

    Top face: ``v = applied_strain * y`` (horizontal free); bottom face:
    ``v = 0``, plus ``u = 0`` at its leftmost node. The lattice gets the same
    field at the generator points of cells touching those faces.
    """
    t0 = time.perf_counter()
    disc = disc or three_phase_discretization(spec, spacing, rng_seed)
    timings = {"mesh": time.perf_counter() - t0}
    phases = spec.phases

    def field(p):
        p = np.atleast_2d(p)
        return np.column_stack([np.zeros(len(p)), applied_strain * p[:, 1]])

    solutions, minor, balance, frac = {}, {}, {}, {}
    if "vem" in models:
        t0 = time.perf_counter()
        mesh = disc.mesh
        bc = BoundarySpec()
        top, bottom = mesh.tagged("top"), mesh.tagged("bottom")
        bc.prescribe_field(top, mesh.nodes, field, components=(1,))
        bc.prescribe_field(bottom, mesh.nodes, lambda p: np.zeros((len(p), 2)), components=(1,))
        bc.prescribe(bottom[np.argmin(mesh.nodes[bottom, 0])], 0, 0.0)
        sol = solve_vem(mesh, phases, bc, **solver)
        sig = sol.stresses()
        solutions["vem"] = sol
        minor["vem"] = minor_principal(sig)
        balance["vem"] = _reaction_balance(reactions(sol.system, sol.d, bc), set(top.tolist()),
                                           set(bottom.tolist()))
        mask = load_path(sig)
        frac["vem"] = float(np.mean(minor["vem"][mask] <= 0.0))
        timings["vem"] = time.perf_counter() - t0
    if "vclm" in models:
        t0 = time.perf_counter()
        lattice = assign_springs(disc.lattice, spring_calibrations(phases))
        top, bottom = lattice.boundary_nodes("top"), lattice.boundary_nodes("bottom")
        bc = BoundarySpec()
        bc.prescribe_field(top, lattice.points, field, components=(1,))
        bc.prescribe_field(bottom, lattice.points, field, components=(1,))
        bc.prescribe(bottom[np.argmin(lattice.points[bottom, 0])], 0, 0.0)
        sol = solve_lattice(lattice, bc, **solver)
        sig = sol.stresses()
        solutions["vclm"] = sol
        minor["vclm"] = minor_principal(sig)
        balance["vclm"] = _reaction_balance(reactions(sol.system, sol.d, bc),
                                            set(top.tolist()), set(bottom.tolist()))
        mask = load_path(sig)
        frac["vclm"] = float(np.mean(minor["vclm"][mask] <= 0.0))
        timings["vclm"] = time.perf_counter() - t0
    return ThreePhaseResult(spec, disc, solutions, minor, balance, frac, timings)
