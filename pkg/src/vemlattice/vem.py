"""First-order virtual element kernel for plane elasticity.

Element DOFs are the vertex displacements, interleaved as
``(u_0, v_0, u_1, v_1, ...)`` over the concatenated boundary loops. The six
vector monomials in the scaled coordinates ``xi = (x - x_E)/h_E`` and
``eta = (y - y_E)/h_E`` are::

    m1 = (1, 0)   m2 = (0, 1)   m3 = (-eta, xi)
    m4 = (eta, xi)   m5 = (xi, 0)   m6 = (0, eta)

the first three spanning rigid motions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateElementError
from .geometry import polygon_geometry

log = logging.getLogger(__name__)

COND_WARN = 1e8


@dataclass
class VemElementMatrices:
    area: float
    centroid: np.ndarray
    diameter: float
    D: np.ndarray
    G: np.ndarray
    B: np.ndarray
    Pi: np.ndarray
    Kc: np.ndarray
    Ks: np.ndarray

    @property
    def K(self) -> np.ndarray:
        return self.Kc + self.Ks

    @property
    def G_tilde(self) -> np.ndarray:
        Gt = self.G.copy()
        Gt[:3] = 0.0
        return Gt


@dataclass
class ElementStress:
    sigma: np.ndarray          # (sxx, syy, sxy)
    principal: np.ndarray      # (s1, s2), s1 >= s2
    directions: np.ndarray     # columns are the unit principal directions

    @property
    def minor(self) -> float:
        return float(self.principal[1])


def monomial_strains(h: float) -> np.ndarray:
    """Voigt engineering strains of m1..m6 as the columns of a 3x6 matrix."""
    eps = np.zeros((3, 6))
    eps[2, 3] = 2.0 / h
    eps[0, 4] = 1.0 / h
    eps[1, 5] = 1.0 / h
    return eps


def monomial_values(points: np.ndarray, centroid: np.ndarray, h: float) -> np.ndarray:
    """Values of m1..m6 at points; shape ``(n, 2, 6)``."""
    s = (np.atleast_2d(points) - centroid) / h
    xi, eta = s[:, 0], s[:, 1]
    one, zero = np.ones_like(xi), np.zeros_like(xi)
    mx = np.stack([one, zero, -eta, eta, xi, zero], axis=-1)
    my = np.stack([zero, one, xi, xi, zero, eta], axis=-1)
    return np.stack([mx, my], axis=1)


def dof_matrix(vertices: np.ndarray, centroid: np.ndarray, h: float) -> np.ndarray:
    """``D[i, a] = dof_i(m_a)``, shape ``(2 N_E, 6)``."""
    return monomial_values(vertices, centroid, h).reshape(-1, 6)


def boundary_moments(loops: Sequence[np.ndarray]) -> np.ndarray:
    """``q_k = sum over edges e at vertex k of |e|/2 n_e`` for every vertex.

    Integrates the hat function of vertex ``k`` times the outward normal with
    two-point Gauss-Lobatto (exact for affine traces). The normal is the edge
    direction rotated clockwise, which is outward for the CCW outer loop and
    for CW hole loops alike.
    """
    parts = []
    for ring in loops:
        ring = np.asarray(ring, dtype=float)
        d = np.roll(ring, -1, axis=0) - ring            # edge k: vertex k -> k+1
        n_len = np.column_stack([d[:, 1], -d[:, 0]])    # |e| * outward normal
        parts.append(0.5 * (n_len + np.roll(n_len, 1, axis=0)))
    return np.concatenate(parts)


def projection_system(loops: Sequence[np.ndarray], C: np.ndarray):
    """Assemble ``D``, ``G``, ``B~`` and solve ``G Pi = B~`` for one element.

    Returns ``(geometry, D, G, B, Pi)`` with ``geometry = (area, centroid, h)``.
    """
    loops = [np.asarray(r, dtype=float) for r in loops]
    area, xc, h = polygon_geometry(loops)
    verts = np.concatenate(loops)
    n = len(verts)
    D = dof_matrix(verts, xc, h)
    eps = monomial_strains(h)
    sig = C @ eps

    G = np.zeros((6, 6))
    G[:3] = D[:, :3].T @ D / n
    G[3:] = sig[:, 3:].T @ eps * area

    B = np.zeros((6, 2 * n))
    B[:3] = D[:, :3].T / n
    q = boundary_moments(loops)
    s = sig[:, 3:]
    B[3:, 0::2] = np.outer(s[0], q[:, 0]) + np.outer(s[2], q[:, 1])
    B[3:, 1::2] = np.outer(s[2], q[:, 0]) + np.outer(s[1], q[:, 1])

    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e14:
        raise DegenerateElementError(f"projection matrix G is singular (cond = {cond:.3g})")
    if cond > COND_WARN:
        log.warning("ill-conditioned element projection: cond(G) = %.3g", cond)
    Pi = scipy.linalg.lu_solve(scipy.linalg.lu_factor(G), B)
    return (area, xc, h), D, G, B, Pi


def element_stiffness(loops: Sequence[np.ndarray], C: np.ndarray) -> VemElementMatrices:
    """Consistency plus diagonal stabilization stiffness of one polygon.

    The stabilization diagonal is ``max(tr(C)/3, (Kc)_ii)``.
    """
    (area, xc, h), D, G, B, Pi = projection_system(loops, C)
    Gt = G.copy()
    Gt[:3] = 0.0
    Kc = Pi.T @ Gt @ Pi
    Kc = 0.5 * (Kc + Kc.T)
    S = np.maximum(np.trace(C) / 3.0, np.diag(Kc))
    P = np.eye(len(D)) - D @ Pi
    Ks = P.T @ (S[:, None] * P)
    Ks = 0.5 * (Ks + Ks.T)
    return VemElementMatrices(area, xc, h, D, G, B, Pi, Kc, Ks)


def projected_coefficients(mats: VemElementMatrices, d_e: np.ndarray) -> np.ndarray:
    return mats.Pi @ d_e


def projected_displacement(mats: VemElementMatrices, d_e: np.ndarray,
                           points: np.ndarray) -> np.ndarray:
    """Evaluate the affine projection of the element displacement at points."""
    c = mats.Pi @ d_e
    return monomial_values(points, mats.centroid, mats.diameter) @ c


def principal_stresses(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors of the symmetric 2x2 stress."""
    T = np.array([[sigma[0], sigma[2]], [sigma[2], sigma[1]]])
    w, v = np.linalg.eigh(T)
    return w[::-1], v[:, ::-1]


def element_stress(mats: VemElementMatrices, C: np.ndarray, d_e: np.ndarray) -> ElementStress:
    """Constant stress of the projected displacement field."""
    strain = monomial_strains(mats.diameter) @ (mats.Pi @ d_e)
    sigma = C @ strain
    p, v = principal_stresses(sigma)
    return ElementStress(sigma, p, v)
