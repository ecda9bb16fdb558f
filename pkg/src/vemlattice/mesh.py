"""Polygonal meshes, clipped Voronoi tessellations and their dual lattices."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import (DegenerateDiagramError, DegeneratePairError, InfeasibleSpacingError,
                     MeshError)
from .geometry import (clip_halfplane, drop_short_edges, points_in_polygon, polygon_geometry,
                       ring_distance, segment_distance, signed_area)
from .vclm import LatticeElement, LatticeModel

log = logging.getLogger(__name__)

DEDUP_TOL = 1e-9      # relative to domain diameter
TAG_TOL = 1e-8        # relative to domain diameter


# --------------------------------------------------------------------------- mesh types

@dataclass
class PolyElement:
    """Polygonal element: first loop is the CCW outer ring, others are CW holes."""

    loops: list
    phase_id: int = 0

    def __post_init__(self):
        self.loops = [np.asarray(loop, dtype=int) for loop in self.loops]

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate(self.loops)

    @property
    def n_vertices(self) -> int:
        return sum(len(loop) for loop in self.loops)

    def edges(self):
        """Directed boundary edges ``(a, b)`` over all loops."""
        for loop in self.loops:
            for k in range(len(loop)):
                yield int(loop[k]), int(loop[(k + 1) % len(loop)])


@dataclass
class PolygonalMesh:
    nodes: np.ndarray
    elements: list
    node_tags: dict = field(default_factory=dict)
    generators: np.ndarray | None = None
    cell_ids: np.ndarray | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.node_tags = {k: np.asarray(sorted(set(int(i) for i in v)), dtype=int)
                          for k, v in self.node_tags.items()}
        n = len(self.nodes)
        for e, el in enumerate(self.elements):
            for loop in el.loops:
                if len(loop) < 3:
                    raise MeshError(f"element {e} has a loop with fewer than 3 vertices")
                if loop.min() < 0 or loop.max() >= n:
                    raise MeshError(f"element {e} references a node outside 0..{n - 1}")
        if self.generators is not None:
            self.generators = np.asarray(self.generators, dtype=float).reshape(-1, 2)
            if len(self.generators) != len(self.elements):
                raise MeshError("need exactly one generator point per element")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_coords(self, e: int) -> list:
        return [self.nodes[loop] for loop in self.elements[e].loops]

    @cached_property
    def geometry(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-element ``(areas, centroids, diameters)``."""
        geo = [polygon_geometry(self.element_coords(e)) for e in range(self.n_elements)]
        return (np.array([g[0] for g in geo]),
                np.array([g[1] for g in geo]).reshape(-1, 2),
                np.array([g[2] for g in geo]))

    @property
    def areas(self) -> np.ndarray:
        return self.geometry[0]

    @property
    def centroids(self) -> np.ndarray:
        return self.geometry[1]

    @property
    def phase_ids(self) -> np.ndarray:
        return np.array([el.phase_id for el in self.elements], dtype=int)

    @property
    def diameter(self) -> float:
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def edge_map(self) -> dict:
        """Undirected edge ``(min, max)`` -> list of elements using it."""
        edges: dict = {}
        for e, el in enumerate(self.elements):
            for a, b in el.edges():
                edges.setdefault((min(a, b), max(a, b)), []).append(e)
        return edges

    def boundary_edges(self) -> list:
        """Directed edges used by exactly one element (orientation of that element)."""
        emap = self.edge_map()
        out = []
        for el in self.elements:
            for a, b in el.edges():
                if len(emap[(min(a, b), max(a, b))]) == 1:
                    out.append((a, b))
        return out

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(np.array(self.boundary_edges(), dtype=int).ravel())

    def tagged(self, tag: str) -> np.ndarray:
        if tag not in self.node_tags:
            raise KeyError(f"no node tag {tag!r}; available: {sorted(self.node_tags)}")
        return self.node_tags[tag]


# --------------------------------------------------------------------------- domains

@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float
    coating: float = 0.0


@dataclass
class DomainSpec:
    """Convex outer polygon with tagged sides plus optional inclusions."""

    outer: np.ndarray
    segment_tags: tuple
    inclusions: tuple = ()
    kind: str = "polygon"

    def __post_init__(self):
        self.outer = np.asarray(self.outer, dtype=float)
        if signed_area(self.outer) <= 0.0:
            raise MeshError("outer boundary must be counter-clockwise with positive area")
        if len(self.segment_tags) != len(self.outer):
            raise MeshError("one tag per outer boundary segment is required")
        for inc in self.inclusions:
            if isinstance(inc, Disk):
                c = np.asarray(inc.center, dtype=float)
                inside = points_in_polygon(c[None, :], self.outer)[0]
                if not inside or ring_distance(c[None, :], self.outer)[0] <= inc.radius:
                    raise MeshError(f"inclusion {inc} is not strictly inside the domain")
            else:
                if not np.all(points_in_polygon(np.asarray(inc), self.outer)):
                    raise MeshError("polygonal inclusion is not strictly inside the domain")

    @classmethod
    def rectangle(cls, width: float = 1.0, height: float = 1.0, origin=(0.0, 0.0),
                  inclusions: Sequence = ()) -> "DomainSpec":
        x0, y0 = origin
        outer = np.array([[x0, y0], [x0 + width, y0],
                          [x0 + width, y0 + height], [x0, y0 + height]])
        return cls(outer, ("bottom", "right", "top", "left"), tuple(inclusions), "rectangle")

    @classmethod
    def circle(cls, radius: float, n_sides: int, center=(0.0, 0.0),
               inclusions: Sequence = ()) -> "DomainSpec":
        outer = regular_polygon(center, radius, n_sides)
        return cls(outer, ("outer",) * n_sides, tuple(inclusions), "circle")

    @property
    def area(self) -> float:
        return signed_area(self.outer)

    @property
    def diameter(self) -> float:
        d = self.outer[:, None, :] - self.outer[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1).max()))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return points_in_polygon(points, self.outer)

    def tags(self) -> list:
        out = []
        for t in self.segment_tags:
            if t not in out:
                out.append(t)
        return out


def regular_polygon(center, radius: float, n: int, phase: float = 0.0) -> np.ndarray:
    """CCW n-gon inscribed in a circle (vertices on the circle)."""
    th = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])


def chord_count(radius: float, spacing: float, minimum: int = 8) -> int:
    return max(minimum, int(math.ceil(2.0 * math.pi * radius / spacing)))


# --------------------------------------------------------------------------- seeds

def generate_seeds(domain: DomainSpec, target_spacing: float, rng_seed: int, *,
                   fixed: np.ndarray | None = None,
                   keep_out: Callable[[np.ndarray], np.ndarray] | None = None,
                   min_distance_factor: float = 0.6,
                   max_attempts_factor: int = 60) -> np.ndarray:
    """Random generator points by dart throwing with a minimum separation.

    About ``area / spacing**2`` points are placed in total (``fixed`` points
    count towards that), each new point at least
    ``min_distance_factor * target_spacing`` from every other. ``keep_out``
    masks candidate points that must be rejected (e.g. bands around
    interfaces that are seeded explicitly).
    """
    if not target_spacing > 0.0:
        raise InfeasibleSpacingError(f"target spacing must be positive, got {target_spacing}")
    if min_distance_factor < 0.5:
        raise ValueError("min_distance_factor below 0.5 violates the separation guarantee")
    rng = np.random.default_rng(rng_seed)
    fixed = np.zeros((0, 2)) if fixed is None else np.asarray(fixed, dtype=float).reshape(-1, 2)
    n_target = max(2, int(round(domain.area / target_spacing ** 2)))
    n_random = max(0, n_target - len(fixed))
    r_min = min_distance_factor * target_spacing
    r2 = r_min * r_min

    lo, hi = domain.outer.min(axis=0), domain.outer.max(axis=0)
    grid: dict = {}

    def cell(p):
        return int(math.floor((p[0] - lo[0]) / r_min)), int(math.floor((p[1] - lo[1]) / r_min))

    def far_enough(p):
        ci, cj = cell(p)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for q in grid.get((ci + di, cj + dj), ()):
                    if (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 < r2:
                        return False
        return True

    for p in fixed:
        grid.setdefault(cell(p), []).append(p)
    placed: list = []
    attempts = 0
    max_attempts = max_attempts_factor * max(n_random, 1)
    batch = 256
    while len(placed) < n_random and attempts < max_attempts:
        cand = lo + rng.random((batch, 2)) * (hi - lo)
        ok = domain.contains(cand)
        if keep_out is not None:
            ok &= ~np.asarray(keep_out(cand), dtype=bool)
        for p, good in zip(cand, ok):
            attempts += 1
            if good and far_enough(p):
                placed.append(p)
                grid.setdefault(cell(p), []).append(p)
                if len(placed) == n_random:
                    break
            if attempts >= max_attempts:
                break
    seeds = np.vstack([fixed, np.array(placed).reshape(-1, 2)])
    if len(seeds) < max(2, n_target // 2):
        raise InfeasibleSpacingError(
            f"placed only {len(seeds)} of {n_target} seeds at spacing {target_spacing}")
    return seeds


def interface_pairs(interface: np.ndarray, offset: float, closed: bool = True,
                    sides: str = "both") -> np.ndarray:
    """Seeds at +-offset along the normal of each interface segment midpoint.

    For a CCW closed ring the "-" seed lies inside. ``sides`` may be
    ``"both"``, ``"inner"`` or ``"outer"``.
    """
    ring = np.asarray(interface, dtype=float)
    nseg = len(ring) if closed else len(ring) - 1
    out = []
    for k in range(nseg):
        a, b = ring[k], ring[(k + 1) % len(ring)]
        length = float(np.linalg.norm(b - a))
        if offset >= length:
            raise DegeneratePairError(
                f"offset {offset:g} is not smaller than the local spacing {length:g}")
        n = np.array([b[1] - a[1], a[0] - b[0]]) / length
        m = 0.5 * (a + b)
        if sides in ("both", "inner"):
            out.append(m - offset * n)
        if sides in ("both", "outer"):
            out.append(m + offset * n)
    return np.array(out).reshape(-1, 2)


def mirror_seeds_across_interface(seeds: np.ndarray, interface: np.ndarray, offset: float,
                                  closed: bool = True,
                                  clearance: float | None = None) -> np.ndarray:
    """Replace seeds near an interface by mirrored pairs straddling it.

    Every interface segment gets a seed pair at ``+-offset`` along its normal;
    the pair's bisector is the segment's supporting line, so the shared
    Voronoi facet reproduces the interface chord. Existing seeds closer than
    ``clearance`` (default 0.75 x longest segment) are removed first.
    """
    ring = np.asarray(interface, dtype=float)
    nseg = len(ring) if closed else len(ring) - 1
    seglen = max(float(np.linalg.norm(ring[(k + 1) % len(ring)] - ring[k])) for k in range(nseg))
    clearance = 0.75 * seglen if clearance is None else clearance
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    if len(seeds):
        seeds = seeds[ring_distance(seeds, ring, closed) > clearance]
    return np.vstack([seeds, interface_pairs(ring, offset, closed)])


# --------------------------------------------------------------------------- voronoi

@dataclass
class Facet:
    i: int
    j: int
    p0: np.ndarray
    p1: np.ndarray
    normal: np.ndarray

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    @property
    def tangent(self) -> np.ndarray:
        return np.array([-self.normal[1], self.normal[0]])


@dataclass
class VoronoiTessellation:
    """Voronoi cells of ``seeds`` clipped to the domain polygon.

    ``edge_labels[i][k]`` identifies what produced edge ``k`` of cell ``i``:
    a neighbour seed index (>= 0) or ``-(s + 1)`` for domain segment ``s``.
    """

    seeds: np.ndarray
    cells: list
    edge_labels: list
    facets: list
    domain: DomainSpec

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_areas(self) -> np.ndarray:
        return np.array([signed_area(c) for c in self.cells])

    def cell_boundary_tags(self, i: int) -> frozenset:
        return frozenset(self.domain.segment_tags[-lab - 1]
                         for lab in self.edge_labels[i] if lab < 0)


def _neighbour_candidates(seeds: np.ndarray) -> list:
    n = len(seeds)
    everyone = [np.array([j for j in range(n) if j != i], dtype=int) for i in range(n)]
    if n <= 4:
        return everyone
    try:
        tri = Delaunay(seeds)
    except QhullError:
        return everyone
    indptr, indices = tri.vertex_neighbor_vertices
    return [np.sort(indices[indptr[i]:indptr[i + 1]]) for i in range(n)]


def clipped_voronoi(seeds: np.ndarray, domain: DomainSpec) -> VoronoiTessellation:
    """Voronoi diagram of ``seeds`` restricted to the (convex) domain polygon.

    Each cell is the domain polygon clipped successively by the bisector
    half-planes of the seed's Delaunay neighbours, which are exactly the seeds
    whose bisectors can bound a Voronoi cell.
    """
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    if len(seeds) < 2:
        raise DegenerateDiagramError("at least two seeds are required")
    diam = domain.diameter
    if not np.all(domain.contains(seeds)):
        raise MeshError("all seeds must lie inside the domain")
    close = cKDTree(seeds).query_pairs(1e-12 * diam)
    if close:
        raise DegenerateDiagramError(f"duplicate seeds: {sorted(close)[:5]}")

    tol_in = 1e-12 * diam
    tol_len = 1e-11 * diam
    nbrs = _neighbour_candidates(seeds)
    base_v = [p.copy() for p in domain.outer]
    base_l = [-(s + 1) for s in range(len(base_v))]
    cells, labels = [], []
    for i, si in enumerate(seeds):
        verts, labs = list(base_v), list(base_l)
        order = nbrs[i][np.argsort(np.linalg.norm(seeds[nbrs[i]] - si, axis=1), kind="stable")]
        for j in order:
            sj = seeds[j]
            normal = sj - si
            verts, labs = clip_halfplane(verts, labs, normal, float(normal @ (0.5 * (si + sj))),
                                         int(j), tol_in * float(np.linalg.norm(normal)))
        verts, labs = drop_short_edges(verts, labs, tol_len)
        if len(verts) < 3:
            raise DegenerateDiagramError(f"cell {i} is empty after clipping")
        cells.append(np.array(verts))
        labels.append(np.array(labs, dtype=int))

    found: dict = {}
    for i, (cell, labs) in enumerate(zip(cells, labels)):
        for k, j in enumerate(labs):
            if j < 0:
                continue
            p0, p1 = cell[k], cell[(k + 1) % len(cell)]
            key = (min(i, int(j)), max(i, int(j)))
            length = float(np.linalg.norm(p1 - p0))
            if key not in found or length > found[key][0]:
                # store endpoints in the CCW orientation of the lower-index cell
                pts = (p0, p1) if i == key[0] else (p1, p0)
                found[key] = (length, pts)
    facets = []
    for (i, j) in sorted(found):
        p0, p1 = found[(i, j)][1]
        d = seeds[j] - seeds[i]
        facets.append(Facet(i, j, p0.copy(), p1.copy(), d / np.linalg.norm(d)))
    return VoronoiTessellation(seeds, cells, labels, facets, domain)


def _dedup_points(points: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge points closer than ``tol``; returns (unique points, inverse map).

    Unique points keep first-appearance order and coordinates.
    """
    n = len(points)
    pairs = np.array(sorted(cKDTree(points).query_pairs(tol)), dtype=int).reshape(-1, 2)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    first = {}
    inverse = np.empty(n, dtype=int)
    reps = []
    for k in range(n):
        c = comp[k]
        if c not in first:
            first[c] = len(reps)
            reps.append(k)
        inverse[k] = first[c]
    return points[reps], inverse


def tag_boundary_nodes(nodes: np.ndarray, domain: DomainSpec) -> dict:
    tol = TAG_TOL * domain.diameter
    tags: dict = {}
    on_outer = np.zeros(len(nodes), dtype=bool)
    m = len(domain.outer)
    for s, tag in enumerate(domain.segment_tags):
        near = segment_distance(nodes, domain.outer[s], domain.outer[(s + 1) % m]) <= tol
        on_outer |= near
        tags.setdefault(tag, set()).update(np.flatnonzero(near).tolist())
    tags["outer"] = set(np.flatnonzero(on_outer).tolist())
    return {k: sorted(v) for k, v in tags.items()}


def tessellation_to_mesh(tess: VoronoiTessellation,
                         phase_classifier: Callable[[np.ndarray], np.ndarray] | None = None
                         ) -> PolygonalMesh:
    """One single-loop element per Voronoi cell, with shared vertices merged.

    ``phase_classifier`` maps seed points to phase ids; a negative id drops
    the cell (used for voids).
    """
    if phase_classifier is None:
        phases = np.zeros(tess.n_cells, dtype=int)
    else:
        phases = np.asarray(phase_classifier(tess.seeds), dtype=int)
    keep = np.flatnonzero(phases >= 0)
    if len(keep) == 0:
        raise MeshError("phase classifier removed every cell")
    raw = np.vstack([tess.cells[i] for i in keep])
    nodes, inverse = _dedup_points(raw, DEDUP_TOL * tess.domain.diameter)
    elements = []
    pos = 0
    for i in keep:
        n = len(tess.cells[i])
        ring = inverse[pos:pos + n]
        pos += n
        ring = [int(v) for k, v in enumerate(ring) if v != ring[(k + 1) % n]]
        if len(ring) < 3:
            raise MeshError(f"cell {i} collapsed during vertex merging")
        elements.append(PolyElement([ring], int(phases[i])))
    return PolygonalMesh(nodes, elements, tag_boundary_nodes(nodes, tess.domain),
                         tess.seeds[keep], keep)


def extract_lattice(tess: VoronoiTessellation, phase_classifier=None,
                    thickness: float = 1.0) -> LatticeModel:
    """Dual lattice: one node per kept seed, one element per interior facet.

    Cells classified with a negative phase are dropped along with their
    facets. Springs are left at zero; see :func:`vclm.assign_springs`.
    """
    if phase_classifier is None:
        phases = np.zeros(tess.n_cells, dtype=int)
    else:
        phases = np.asarray(phase_classifier(tess.seeds), dtype=int)
    keep = np.flatnonzero(phases >= 0)
    renum = -np.ones(tess.n_cells, dtype=int)
    renum[keep] = np.arange(len(keep))
    min_len = DEDUP_TOL * tess.domain.diameter
    elements = []
    dropped = 0
    for f in tess.facets:
        i, j = renum[f.i], renum[f.j]
        if i < 0 or j < 0:
            continue
        if f.length <= min_len:
            dropped += 1
            continue
        elements.append(LatticeElement(int(i), int(j), tess.seeds[f.i].copy(),
                                       tess.seeds[f.j].copy(), f.length, f.midpoint))
    if dropped:
        warnings.warn(f"dropped {dropped} zero-length facet(s) from the lattice", stacklevel=2)
    tags = []
    for i in keep:
        t = set(tess.cell_boundary_tags(i))
        if t:
            t.add("outer")
        # dropped neighbours (voids) expose a free surface, not a tagged boundary
        tags.append(frozenset(t))
    cells = [tess.cells[i] for i in keep]
    areas = np.array([signed_area(c) for c in cells])
    return LatticeModel(tess.seeds[keep].copy(), cells, areas, phases[keep], elements, tags,
                        thickness)


# --------------------------------------------------------------------------- mesh utilities

def edge_components(mesh: PolygonalMesh, element_mask: np.ndarray | None = None) -> np.ndarray:
    """Label elements by connected component, adjacency through shared edges."""
    n = mesh.n_elements
    mask = np.ones(n, dtype=bool) if element_mask is None else np.asarray(element_mask, bool)
    rows, cols = [], []
    for users in mesh.edge_map().values():
        users = [u for u in users if mask[u]]
        for a, b in zip(users[:-1], users[1:]):
            rows.append(a)
            cols.append(b)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    labels = np.where(mask, labels, -1)
    return labels


def submesh(mesh: PolygonalMesh, element_mask: np.ndarray) -> PolygonalMesh:
    """Keep the masked elements and renumber the nodes they use."""
    keep = np.flatnonzero(element_mask)
    used = np.zeros(mesh.n_nodes, dtype=bool)
    for e in keep:
        used[mesh.elements[e].vertices] = True
    renum = -np.ones(mesh.n_nodes, dtype=int)
    renum[used] = np.arange(int(used.sum()))
    elements = [PolyElement([renum[loop] for loop in mesh.elements[e].loops],
                            mesh.elements[e].phase_id) for e in keep]
    tags = {k: renum[v][renum[v] >= 0] for k, v in mesh.node_tags.items()}
    gens = None if mesh.generators is None else mesh.generators[keep]
    cells = None if mesh.cell_ids is None else mesh.cell_ids[keep]
    return PolygonalMesh(mesh.nodes[used], elements, tags, gens, cells)


def _chain_loops(directed_edges: list) -> list:
    succ: dict = {}
    for a, b in directed_edges:
        if a in succ:
            raise MeshError(f"node {a} is a pinch point of the merged region")
        succ[a] = b
    loops = []
    while succ:
        start = min(succ)
        loop = [start]
        nxt = succ.pop(start)
        while nxt != start:
            loop.append(nxt)
            nxt = succ.pop(nxt)
        loops.append(loop)
    return loops


def merge_phase(mesh: PolygonalMesh, phase_id: int) -> PolygonalMesh:
    """Fuse each edge-connected group of ``phase_id`` elements into one element.

    The merged element's loops are the group's boundary; its outer loop is the
    one with positive area and the rest are holes. Other elements are kept
    unchanged, so vertices on the group boundary stay shared; nodes left
    inside a group are removed and the rest renumbered.
    """
    in_phase = mesh.phase_ids == phase_id
    labels = edge_components(mesh, in_phase)
    new_elements, gens = [], []
    for e, el in enumerate(mesh.elements):
        if not in_phase[e]:
            new_elements.append(el)
            gens.append(None if mesh.generators is None else mesh.generators[e])
    for comp in sorted(set(labels[in_phase].tolist())):
        members = np.flatnonzero(labels == comp)
        directed = set()
        for e in members:
            directed.update(mesh.elements[e].edges())
        boundary = [(a, b) for (a, b) in directed if (b, a) not in directed]
        loops = _chain_loops(sorted(boundary))
        loops.sort(key=lambda lp: -signed_area(mesh.nodes[lp]))
        if signed_area(mesh.nodes[loops[0]]) <= 0:
            raise MeshError("merged region has no counter-clockwise outer loop")
        new_elements.append(PolyElement(loops, phase_id))
        areas = mesh.areas[members]
        gens.append(mesh.centroids[members].T @ areas / areas.sum())
    generators = None if mesh.generators is None else np.array(gens)
    merged = PolygonalMesh(mesh.nodes.copy(), new_elements, dict(mesh.node_tags), generators)
    # nodes interior to a merged group are no longer used by any element
    return submesh(merged, np.ones(merged.n_elements, dtype=bool))


def single_inclusion_mesh() -> PolygonalMesh:
    """Unit square holding an irregular inclusion, discretized by two elements.

    The inclusion is one nonconvex septagon; the surrounding matrix is a single
    nonsimply-connected element whose boundary is the square (4 nodes, CCW)
    plus the septagon traversed clockwise as an inner loop.
    """
    square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    septagon = [[0.30, 0.32], [0.58, 0.22], [0.76, 0.41], [0.60, 0.50],
                [0.70, 0.72], [0.42, 0.75], [0.27, 0.56]]
    nodes = np.array(square + septagon)
    inner = list(range(4, 11))
    elements = [PolyElement([inner], 1),
                PolyElement([[0, 1, 2, 3], inner[::-1]], 0)]
    domain = DomainSpec.rectangle()
    return PolygonalMesh(nodes, elements, tag_boundary_nodes(nodes, domain))


def lattice_from_mesh(mesh: PolygonalMesh, thickness: float = 1.0) -> LatticeModel:
    """Dual lattice of a single-loop mesh that carries generator points.

    Elements sharing an edge become lattice neighbours (collinear pieces of a
    shared boundary are merged into one facet). A cell receives a boundary
    tag when one of its boundary edges has both end nodes carrying that tag.
    """
    if mesh.generators is None:
        raise MeshError("the lattice needs a generator point per element")
    if any(len(el.loops) != 1 for el in mesh.elements):
        raise MeshError("the lattice needs simply connected cells")
    pairs: dict = {}
    tags = [set() for _ in mesh.elements]
    tag_sets = {k: set(v.tolist()) for k, v in mesh.node_tags.items() if k != "outer"}
    for (a, b), users in sorted(mesh.edge_map().items()):
        p, q = mesh.nodes[a], mesh.nodes[b]
        if len(users) == 2:
            length = float(np.linalg.norm(q - p))
            acc = pairs.setdefault(tuple(sorted(users)), [0.0, np.zeros(2)])
            acc[0] += length
            acc[1] = acc[1] + length * 0.5 * (p + q)
        elif len(users) == 1:
            for tag, nodes in tag_sets.items():
                if a in nodes and b in nodes:
                    tags[users[0]].update((tag, "outer"))
    gens = mesh.generators
    min_len = DEDUP_TOL * mesh.diameter
    elements = [LatticeElement(i, j, gens[i].copy(), gens[j].copy(), length, mid / length)
                for (i, j), (length, mid) in sorted(pairs.items()) if length > min_len]
    cells = [mesh.nodes[el.loops[0]] for el in mesh.elements]
    return LatticeModel(gens.copy(), cells, mesh.areas.copy(), mesh.phase_ids, elements,
                        [frozenset(t) for t in tags], thickness)
