"""Global assembly, boundary conditions and linear solves for VEM and lattice models."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BoundaryError, SolverError, UnderConstrainedError
from .materials import MaterialPhase, constitutive_matrix
from .mesh import PolygonalMesh
from .vclm import LatticeModel, lattice_element_stiffness
from .vem import VemElementMatrices, element_stiffness

log = logging.getLogger(__name__)


@dataclass
class BoundarySpec:
    """Prescribed DOF values and constant edge tractions.

    ``dirichlet`` maps ``(node, component) -> value``; ``tractions`` holds
    ``(node_a, node_b, (tx, ty))`` for boundary edges.
    """

    dirichlet: dict = field(default_factory=dict)
    tractions: list = field(default_factory=list)

    def prescribe(self, node: int, component: int, value: float) -> None:
        key = (int(node), int(component))
        old = self.dirichlet.get(key)
        if old is not None and old != value:
            raise BoundaryError(f"node {node} component {component} prescribed twice "
                                f"with conflicting values {old} and {value}")
        self.dirichlet[key] = float(value)

    def prescribe_field(self, nodes: Iterable[int], points: np.ndarray,
                        field_fn: Callable[[np.ndarray], np.ndarray],
                        components: Iterable[int] = (0, 1)) -> None:
        """Prescribe ``field_fn(points)`` (shape ``(n, 2)``) at the given nodes."""
        nodes = np.asarray(list(nodes), dtype=int)
        values = np.atleast_2d(field_fn(np.asarray(points)[nodes]))
        for node, val in zip(nodes, values):
            for c in components:
                self.prescribe(node, c, val[c])

    def add_traction(self, a: int, b: int, traction) -> None:
        self.tractions.append((int(a), int(b), tuple(float(t) for t in traction)))

    def constrained_dofs(self, dofs_per_node: int) -> tuple[np.ndarray, np.ndarray]:
        items = sorted(self.dirichlet.items())
        dofs = np.array([n * dofs_per_node + c for (n, c), _ in items], dtype=int)
        vals = np.array([v for _, v in items], dtype=float)
        return dofs, vals


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    f: np.ndarray
    dofs_per_node: int
    points: np.ndarray

    @property
    def ndof(self) -> int:
        return self.K.shape[0]

    def rigid_modes(self) -> np.ndarray:
        """Columns: x-translation, y-translation, rotation about the origin."""
        n = len(self.points)
        R = np.zeros((self.ndof, 3))
        k = self.dofs_per_node
        R[0::k, 0] = 1.0
        R[1::k, 1] = 1.0
        R[0::k, 2] = -self.points[:, 1]
        R[1::k, 2] = self.points[:, 0]
        if k == 3:
            R[2::k, 2] = 1.0
        assert R.shape[0] == n * k
        return R


def assemble(element_matrices: Iterable[np.ndarray], element_dofs: Iterable[np.ndarray],
             ndof: int) -> sp.csr_matrix:
    """Scatter-add element matrices into a CSR matrix.

    Triplets are sorted by ``(row, col, value)`` and reduced in that order,
    so duplicates are always summed in the same sequence and the result is
    bit-identical whatever order the elements arrive in.
    """
    rows, cols, vals = [], [], []
    for Ke, dofs in zip(element_matrices, element_dofs):
        dofs = np.asarray(dofs, dtype=int)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(np.asarray(Ke, dtype=float).ravel())
    if not rows:
        return sp.csr_matrix((ndof, ndof))
    r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    order = np.lexsort((v, c, r))
    r, c, v = r[order], c[order], v[order]
    key = r.astype(np.int64) * ndof + c
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    summed = np.add.reduceat(v, starts)
    K = sp.csr_matrix((summed, (r[starts], c[starts])), shape=(ndof, ndof))
    K.sort_indices()
    touched = np.zeros(ndof, dtype=bool)
    touched[r] = True
    if not touched.all():
        warnings.warn(f"{int((~touched).sum())} DOF(s) belong to no element; they must be "
                      "constrained", stacklevel=2)
    return K


def element_dofs(vertices: np.ndarray, dofs_per_node: int = 2) -> np.ndarray:
    v = np.asarray(vertices, dtype=int)
    return (v[:, None] * dofs_per_node + np.arange(dofs_per_node)[None, :]).ravel()


def vem_element_matrices(mesh: PolygonalMesh,
                         phases: Mapping[int, MaterialPhase]) -> list[VemElementMatrices]:
    out = []
    for e, el in enumerate(mesh.elements):
        C = constitutive_matrix(phases[el.phase_id])
        out.append(element_stiffness(mesh.element_coords(e), C))
    return out


def assemble_vem(mesh: PolygonalMesh, phases: Mapping[int, MaterialPhase]):
    """Global VEM system; returns ``(GlobalSystem, element matrices)``."""
    mats = vem_element_matrices(mesh, phases)
    K = assemble((m.K for m in mats), (element_dofs(el.vertices) for el in mesh.elements),
                 2 * mesh.n_nodes)
    return GlobalSystem(K, np.zeros(2 * mesh.n_nodes), 2, mesh.nodes), mats


def assemble_lattice(lattice: LatticeModel) -> GlobalSystem:
    K = assemble((lattice_element_stiffness(el) for el in lattice.elements),
                 (el.dofs for el in lattice.elements), lattice.ndof)
    return GlobalSystem(K, np.zeros(lattice.ndof), 3, lattice.points)


def apply_tractions(spec: BoundarySpec, mesh: PolygonalMesh) -> np.ndarray:
    """Consistent nodal loads of constant edge tractions (half to each end)."""
    f = np.zeros(2 * mesh.n_nodes)
    if not spec.tractions:
        return f
    emap = mesh.edge_map()
    for a, b, t in spec.tractions:
        users = emap.get((min(a, b), max(a, b)))
        if users is None:
            raise BoundaryError(f"({a}, {b}) is not an edge of the mesh")
        if len(users) != 1:
            raise BoundaryError(f"traction applied on interior edge ({a}, {b})")
        length = float(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a]))
        for node in (a, b):
            f[2 * node:2 * node + 2] += 0.5 * length * np.asarray(t)
    return f


def apply_lattice_tractions(spec: BoundarySpec, mesh: PolygonalMesh,
                            generators: np.ndarray) -> np.ndarray:
    """Cell loads of constant edge tractions for the lattice dual to ``mesh``.

    Cell ``e`` is lattice node ``e``. Each traction edge adds its resultant
    ``|e| t`` to the owning cell and the moment of that resultant, acting at
    the edge midpoint, about the cell's generator point.
    """
    f = np.zeros(3 * mesh.n_elements)
    if not spec.tractions:
        return f
    emap = mesh.edge_map()
    for a, b, t in spec.tractions:
        users = emap.get((min(a, b), max(a, b)))
        if users is None:
            raise BoundaryError(f"({a}, {b}) is not an edge of the mesh")
        if len(users) != 1:
            raise BoundaryError(f"traction applied on interior edge ({a}, {b})")
        e = users[0]
        F = float(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a])) * np.asarray(t)
        arm = 0.5 * (mesh.nodes[a] + mesh.nodes[b]) - generators[e]
        f[3 * e:3 * e + 2] += F
        f[3 * e + 2] += arm[0] * F[1] - arm[1] * F[0]
    return f


def _check_rigid_modes(system: GlobalSystem, fixed: np.ndarray) -> None:
    R = system.rigid_modes()[fixed]
    if len(fixed) == 0 or np.linalg.matrix_rank(R, tol=1e-10 * max(1.0, np.abs(R).max())) < 3:
        raise UnderConstrainedError(
            "under-constrained: the prescribed DOFs do not suppress all rigid-body modes")


def _pcg(A: sp.csr_matrix, b: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients to relative residual ``tol``."""
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise UnderConstrainedError("under-constrained: non-positive diagonal in reduced system")
    minv = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    z = minv * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise UnderConstrainedError("under-constrained: reduced system is not positive definite")
        a = rz / pAp
        x += a * p
        r -= a * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(b - A @ x) / bnorm
    raise SolverError(f"CG did not converge in {maxiter} iterations (relative residual {res:.3e})")


def apply_dirichlet_and_solve(system: GlobalSystem, spec: BoundarySpec, *,
                              method: str = "direct", tol: float = 1e-12,
                              max_iter: int | None = None) -> np.ndarray:
    """Solve ``K d = f`` with prescribed DOFs eliminated symmetrically.

    ``method`` is ``"direct"`` (sparse LU factorization of the reduced SPD
    matrix) or ``"cg"`` (Jacobi-preconditioned conjugate gradients).
    """
    fixed, vals = spec.constrained_dofs(system.dofs_per_node)
    if np.any(fixed >= system.ndof):
        raise BoundaryError("a prescribed DOF lies outside the system")
    d = np.zeros(system.ndof)
    d[fixed] = vals
    free = np.setdiff1d(np.arange(system.ndof), fixed)
    if len(free) == 0:
        return d
    _check_rigid_modes(system, fixed)
    K = system.K
    Kff = K[free][:, free].tocsc()
    rhs = system.f[free] - K[free][:, fixed] @ vals
    if method == "direct":
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                lu = spla.splu(Kff)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise UnderConstrainedError(f"under-constrained: singular reduced system ({exc})")
        x = lu.solve(rhs)
    elif method == "cg":
        x = _pcg(Kff.tocsr(), rhs, tol, max_iter or 20 * len(free))
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise UnderConstrainedError("under-constrained: solve produced non-finite values")
    scale = max(np.linalg.norm(rhs), np.abs(Kff).max() * np.linalg.norm(x), 1e-300)
    res = np.linalg.norm(Kff @ x - rhs) / scale
    if res > 1e-8:
        raise UnderConstrainedError(f"under-constrained: residual {res:.3e} after solve")
    d[free] = x
    return d


def reactions(system: GlobalSystem, d: np.ndarray, spec: BoundarySpec) -> dict:
    """Reaction force at every constrained DOF, keyed like ``spec.dirichlet``."""
    r = system.K @ d - system.f
    k = system.dofs_per_node
    return {(n, c): float(r[n * k + c]) for (n, c) in sorted(spec.dirichlet)}


def equilibrium_residual(system: GlobalSystem, d: np.ndarray, spec: BoundarySpec) -> float:
    """Relative out-of-balance ``|sum R + sum F|`` over both force components.

    Normalized by the larger of the total reaction and load magnitudes.
    """
    r = system.K @ d - system.f
    fixed, _ = spec.constrained_dofs(system.dofs_per_node)
    reac = np.zeros_like(r)
    reac[fixed] = r[fixed]
    k = system.dofs_per_node
    total = reac + system.f
    net = np.array([total[0::k].sum(), total[1::k].sum()])
    scale = max(np.abs(reac[0::k]).sum() + np.abs(reac[1::k]).sum(),
                np.abs(system.f).sum(), 1e-300)
    return float(np.abs(net).max() / scale)


def free_residual(system: GlobalSystem, d: np.ndarray, spec: BoundarySpec) -> float:
    """Largest out-of-balance nodal force at free DOFs, relative to the load scale."""
    r = system.K @ d - system.f
    fixed, _ = spec.constrained_dofs(system.dofs_per_node)
    mask = np.ones(system.ndof, dtype=bool)
    mask[fixed] = False
    scale = max(np.abs(r[~mask]).max(initial=0.0), np.abs(system.f).max(initial=0.0), 1e-300)
    return float(np.abs(r[mask]).max(initial=0.0) / scale)
