"""Voronoi-cell lattice model built on the rigid-body-spring concept.

Each Voronoi cell is a rigid body carrying three DOFs ``(u, v, theta)`` at its
generator point. Neighbouring cells interact through a zero-size spring set
(normal, tangential, rotational) placed at the midpoint of their common facet.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationRangeError, DegenerateElementError


@dataclass
class LatticeElement:
    i: int
    j: int
    xi: np.ndarray
    xj: np.ndarray
    length: float
    midpoint: np.ndarray
    kn: float = 0.0
    kt: float = 0.0
    kphi: float = 0.0

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.xj - self.xi))

    @property
    def normal(self) -> np.ndarray:
        d = self.xj - self.xi
        return d / np.linalg.norm(d)

    @property
    def tangent(self) -> np.ndarray:
        n = self.normal
        return np.array([-n[1], n[0]])

    @property
    def dofs(self) -> np.ndarray:
        return np.array([3 * self.i, 3 * self.i + 1, 3 * self.i + 2,
                         3 * self.j, 3 * self.j + 1, 3 * self.j + 2])


@dataclass
class LatticeModel:
    """Lattice nodes (generator points), their cells and facet springs.

    ``boundary_tags[k]`` lists the domain-boundary tags that cell ``k``
    touches; it drives the assignment of boundary conditions, which the lattice
    receives at generator points adjacent to the boundary.
    """

    points: np.ndarray
    cells: list
    areas: np.ndarray
    phase: np.ndarray
    elements: list
    boundary_tags: list = field(default_factory=list)
    thickness: float = 1.0

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def ndof(self) -> int:
        return 3 * len(self.points)

    @property
    def volumes(self) -> np.ndarray:
        return self.areas * self.thickness

    def boundary_nodes(self, tag: str | None = None) -> np.ndarray:
        """Nodes whose cell touches the boundary (optionally a tagged part of it)."""
        return np.array([k for k, tags in enumerate(self.boundary_tags)
                         if (tags if tag is None else tag in tags)], dtype=int)


@dataclass(frozen=True)
class SpringCalibration:
    alpha: float
    E0: float

    @property
    def nu(self) -> float:
        return (1.0 - self.alpha) / (3.0 + self.alpha)

    @property
    def E(self) -> float:
        return self.E0 * (2.0 + 2.0 * self.alpha) / (3.0 + self.alpha)


def calibrate_springs(E: float, nu: float) -> SpringCalibration:
    """Spring ratio ``kt/kn`` and element modulus reproducing ``(E, nu)``.

    Inverts ``nu = (1 - a)/(3 + a)`` and ``E = E0 (2 + 2a)/(3 + a)``; only
    ``0 <= nu < 1/3`` gives a positive tangential stiffness.
    """
    if not 0.0 <= nu < 1.0 / 3.0:
        raise CalibrationRangeError(
            f"lattice calibration needs 0 <= nu < 1/3, got nu = {nu}")
    alpha = (1.0 - 3.0 * nu) / (1.0 + nu)
    E0 = E * (3.0 + alpha) / (2.0 + 2.0 * alpha)
    return SpringCalibration(alpha, E0)


def equal_springs(E: float) -> SpringCalibration:
    """``kn = kt`` lattice; macroscopically elastic with nu = 0."""
    return SpringCalibration(1.0, E)


def _harmonic(a: float, b: float) -> float:
    if a == b:
        return a
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def assign_spring_stiffness(el: LatticeElement, cal_i: SpringCalibration,
                            cal_j: SpringCalibration | None = None,
                            thickness: float = 1.0) -> LatticeElement:
    """Return a copy of ``el`` with spring stiffnesses set.

    ``kn = E0 t h / d``, ``kt = alpha kn``, ``kphi = kn h^2 / 12``. Facets joining
    two phases take harmonic means of the per-side normal and tangential
    stiffnesses.
    """
    d = el.distance
    if not d > 0.0:
        raise DegenerateElementError(f"lattice element ({el.i}, {el.j}) has zero length")
    cal_j = cal_i if cal_j is None else cal_j
    kn_i = cal_i.E0 * thickness * el.length / d
    kn_j = cal_j.E0 * thickness * el.length / d
    kn = _harmonic(kn_i, kn_j)
    kt = _harmonic(cal_i.alpha * kn_i, cal_j.alpha * kn_j)
    return dataclasses.replace(el, kn=kn, kt=kt, kphi=kn * el.length ** 2 / 12.0)


def assign_springs(lattice: LatticeModel, calibrations: dict) -> LatticeModel:
    """Set springs on every element from a ``phase_id -> SpringCalibration`` map."""
    elements = [assign_spring_stiffness(el, calibrations[int(lattice.phase[el.i])],
                                        calibrations[int(lattice.phase[el.j])],
                                        lattice.thickness)
                for el in lattice.elements]
    return dataclasses.replace(lattice, elements=elements)


def kinematic_matrix(el: LatticeElement) -> np.ndarray:
    """3x6 map from ``(u_i, v_i, th_i, u_j, v_j, th_j)`` to spring deformations.

    Rows: normal opening, tangential slip, relative rotation, all measured at
    the facet midpoint under rigid-cell kinematics.
    """
    n, t = el.normal, el.tangent
    ri = el.midpoint - el.xi
    rj = el.midpoint - el.xj
    # rigid-body displacement at offset r from the node: u + theta * (-r_y, r_x)
    Ti = np.array([[1.0, 0.0, -ri[1]], [0.0, 1.0, ri[0]]])
    Tj = np.array([[1.0, 0.0, -rj[1]], [0.0, 1.0, rj[0]]])
    B = np.zeros((3, 6))
    B[0, :3], B[0, 3:] = -n @ Ti, n @ Tj
    B[1, :3], B[1, 3:] = -t @ Ti, t @ Tj
    B[2, 2], B[2, 5] = -1.0, 1.0
    return B


def lattice_element_stiffness(el: LatticeElement) -> np.ndarray:
    B = kinematic_matrix(el)
    return B.T @ np.diag([el.kn, el.kt, el.kphi]) @ B


def spring_forces(el: LatticeElement, d_el: np.ndarray) -> np.ndarray:
    """Generalized spring forces ``(N, T, M)``; positive N is tension."""
    return np.array([el.kn, el.kt, el.kphi]) * (kinematic_matrix(el) @ d_el)


def nodal_stress(lattice: LatticeModel, d: np.ndarray) -> np.ndarray:
    """Volume-averaged cell stresses ``(1/V) sum_k x_k (x) f_k``.

    ``x_k`` is the facet midpoint relative to the cell node and ``f_k`` the
    spring-set force acting on that cell. The result, shape ``(n, 2, 2)``, is
    in general not symmetric.
    """
    sigma = np.zeros((lattice.n_nodes, 2, 2))
    for el in lattice.elements:
        N, T, _ = spring_forces(el, d[el.dofs])
        f = N * el.normal + T * el.tangent      # force on cell i; cell j gets -f
        sigma[el.i] += np.outer(el.midpoint - el.xi, f)
        sigma[el.j] -= np.outer(el.midpoint - el.xj, f)
    return sigma / lattice.volumes[:, None, None]


def stress_asymmetry(sigma: np.ndarray) -> np.ndarray:
    """Magnitude of the skew part of each averaged stress tensor."""
    return np.abs(sigma[..., 0, 1] - sigma[..., 1, 0]) / 2.0


def symmetric_voigt(sigma: np.ndarray) -> np.ndarray:
    """``(sxx, syy, sxy)`` of the symmetric part of 2x2 tensors."""
    sigma = np.asarray(sigma)
    return np.stack([sigma[..., 0, 0], sigma[..., 1, 1],
                     0.5 * (sigma[..., 0, 1] + sigma[..., 1, 0])], axis=-1)
