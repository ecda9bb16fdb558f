"""Isotropic linear-elastic phases in plane stress and plane strain.

All strain and stress vectors use Voigt order with engineering shear:
strain ``(exx, eyy, gxy)`` with ``gxy = 2 exy`` and stress ``(sxx, syy, sxy)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompressibleError, MaterialError

PLANE_STRESS = "plane_stress"
PLANE_STRAIN = "plane_strain"
MODES = (PLANE_STRESS, PLANE_STRAIN)


@dataclass(frozen=True)
class MaterialPhase:
    E: float
    nu: float
    mode: str = PLANE_STRAIN

    def __post_init__(self):
        if self.mode not in MODES:
            raise MaterialError(f"unknown analysis mode {self.mode!r}; expected one of {MODES}")
        if not self.E > 0.0:
            raise MaterialError(f"Young's modulus must be positive, got {self.E}")
        if self.nu == 0.5:
            raise IncompressibleError("nu = 0.5 is incompressible; not supported")
        if not -1.0 < self.nu < 0.5:
            raise MaterialError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")

    def with_mode(self, mode: str) -> "MaterialPhase":
        return MaterialPhase(self.E, self.nu, mode)


@dataclass(frozen=True)
class LameParameters:
    lam: float
    mu: float


def lame_parameters(phase: MaterialPhase) -> LameParameters:
    """Lame pair for the phase; plane stress returns the effective lambda."""
    E, nu = phase.E, phase.nu
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    if phase.mode == PLANE_STRESS:
        lam = 2.0 * lam * mu / (lam + 2.0 * mu)
    return LameParameters(lam, mu)


def constitutive_from_lame(lam: float, mu: float) -> np.ndarray:
    return np.array([[lam + 2.0 * mu, lam, 0.0],
                     [lam, lam + 2.0 * mu, 0.0],
                     [0.0, 0.0, mu]])


def constitutive_matrix(phase: MaterialPhase) -> np.ndarray:
    """3x3 Voigt stiffness mapping engineering strain to stress."""
    E, nu = phase.E, phase.nu
    if phase.mode == PLANE_STRESS:
        c = E / (1.0 - nu * nu)
        return c * np.array([[1.0, nu, 0.0],
                             [nu, 1.0, 0.0],
                             [0.0, 0.0, 0.5 * (1.0 - nu)]])
    c = E / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return c * np.array([[1.0 - nu, nu, 0.0],
                         [nu, 1.0 - nu, 0.0],
                         [0.0, 0.0, 0.5 - nu]])
