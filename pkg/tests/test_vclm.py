import numpy as np
import pytest

from vemlattice.errors import CalibrationRangeError, DegenerateElementError
from vemlattice.mesh import DomainSpec, clipped_voronoi, extract_lattice, generate_seeds
from vemlattice.system import BoundarySpec, apply_dirichlet_and_solve, assemble_lattice
from vemlattice.vclm import (LatticeElement, assign_spring_stiffness, assign_springs,
                             calibrate_springs, equal_springs, kinematic_matrix,
                             lattice_element_stiffness, nodal_stress, spring_forces,
                             stress_asymmetry, symmetric_voigt)


def split_square_element(**springs):
    return LatticeElement(0, 1, np.array([0.25, 0.5]), np.array([0.75, 0.5]), 1.0,
                          np.array([0.5, 0.5]), **springs)


@pytest.mark.parametrize("nu", [0.0, 0.1, 0.2, 0.3, 0.33])
def test_calibration_round_trip(nu):
    cal = calibrate_springs(2.5, nu)
    assert (1 - cal.alpha) / (3 + cal.alpha) == pytest.approx(nu, abs=1e-15)
    assert cal.E0 * (2 + 2 * cal.alpha) / (3 + cal.alpha) == pytest.approx(2.5)
    assert cal.nu == pytest.approx(nu, abs=1e-15)
    assert 0 <= cal.alpha <= 1


def test_calibration_values():
    c = calibrate_springs(1.0, 0.0)
    assert (c.alpha, c.E0) == (pytest.approx(1.0), pytest.approx(1.0))
    c = calibrate_springs(1.0, 0.2)
    assert (c.alpha, c.E0) == (pytest.approx(1 / 3), pytest.approx(1.25))
    assert calibrate_springs(1.0, 0.3).alpha == pytest.approx(1 / 13)
    assert equal_springs(3.0).alpha == 1.0 and equal_springs(3.0).E0 == 3.0
    for bad in (1 / 3, 0.4, -0.1):
        with pytest.raises(CalibrationRangeError):
            calibrate_springs(1.0, bad)


def test_spring_magnitudes():
    el = assign_spring_stiffness(split_square_element(), equal_springs(1.0))
    assert el.kn == pytest.approx(2.0) and el.kt == pytest.approx(2.0)
    assert el.kphi == pytest.approx(2.0 / 12)
    el = assign_spring_stiffness(split_square_element(), equal_springs(10.0), equal_springs(1.0))
    assert el.kn / 2.0 == pytest.approx(20 / 11)
    el = assign_spring_stiffness(split_square_element(), calibrate_springs(1.0, 0.2),
                                 thickness=0.5)
    assert el.kt == pytest.approx(el.kn / 3) and el.kn == pytest.approx(1.25 * 0.5 / 0.5)
    bad = LatticeElement(0, 1, np.zeros(2), np.zeros(2), 1.0, np.zeros(2))
    with pytest.raises(DegenerateElementError):
        assign_spring_stiffness(bad, equal_springs(1.0))


def test_element_kernel_and_stretch():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xi, xj = rng.uniform(-1, 1, (2, 2))
        mid = 0.5 * (xi + xj) + rng.uniform(-0.2, 0.2) * np.array([xi[1] - xj[1], xj[0] - xi[0]])
        el = LatticeElement(0, 1, xi, xj, rng.uniform(0.1, 1), mid, *rng.uniform(0.1, 3, 3))
        K = lattice_element_stiffness(el)
        assert np.allclose(K, K.T)
        w = np.linalg.eigvalsh(K)
        tol = 1e-10 * np.abs(np.diag(K)).max()
        assert w.min() >= -tol and int(np.sum(np.abs(w) < tol)) == 3
        # rigid rotation about an arbitrary point c
        c, th = rng.uniform(-1, 1, 2), 0.37
        d = []
        for x in (xi, xj):
            d += [-th * (x[1] - c[1]), th * (x[0] - c[0]), th]
        np.testing.assert_allclose(K @ np.array(d), 0.0, atol=1e-12 * np.abs(K).max())
        np.testing.assert_allclose(K @ np.tile([1.0, -2.0, 0.0], 2), 0.0, atol=1e-12 * np.abs(K).max())
    el = assign_spring_stiffness(split_square_element(), calibrate_springs(1.0, 0.2))
    d = np.array([0, 0, 0, 0.01, 0, 0])
    N, T, M = spring_forces(el, d)
    assert N == pytest.approx(el.kn * 0.01) and T == pytest.approx(0) and M == 0
    np.testing.assert_allclose(kinematic_matrix(el)[0], [-1, 0, 0, 1, 0, 0])


def _lattice(spacing=0.08, seed=1, cal=None):
    dom = DomainSpec.rectangle()
    lat = extract_lattice(clipped_voronoi(generate_seeds(dom, spacing, seed), dom))
    return assign_springs(lat, {0: cal or equal_springs(1.0)})


def _impose(lat, grad, rotate=True):
    bc = BoundarySpec()
    w = 0.5 * (grad[1, 0] - grad[0, 1])
    for n in lat.boundary_nodes():
        u = grad @ lat.points[n]
        bc.prescribe(n, 0, u[0])
        bc.prescribe(n, 1, u[1])
        if rotate:
            bc.prescribe(n, 2, w)
    return bc


def test_uniform_uniaxial_strain_alpha_one():
    lat = _lattice()
    grad = np.array([[1e-3, 0], [0, 0.0]])
    d = apply_dirichlet_and_solve(assemble_lattice(lat), _impose(lat, grad))
    sig = nodal_stress(lat, d)
    inner = np.setdiff1d(np.arange(lat.n_nodes), lat.boundary_nodes())
    np.testing.assert_allclose(symmetric_voigt(sig[inner]), np.tile([1e-3, 0, 0], (len(inner), 1)),
                               atol=1e-8 * 1e-3)
    assert stress_asymmetry(sig[inner]).max() < 1e-14
    np.testing.assert_allclose(d.reshape(-1, 3)[:, :2], lat.points @ grad.T, atol=1e-15)


def test_zero_displacement_zero_stress_and_force_balance():
    lat = _lattice(cal=calibrate_springs(1.0, 0.25))
    assert np.all(nodal_stress(lat, np.zeros(lat.ndof)) == 0)
    grad = np.array([[1e-3, 2e-3], [-1e-3, 5e-4]])
    sysm = assemble_lattice(lat)
    bc = _impose(lat, grad, rotate=False)
    d = apply_dirichlet_and_solve(sysm, bc)
    r = sysm.K @ d
    inner = np.setdiff1d(np.arange(lat.n_nodes), lat.boundary_nodes())
    scale = np.abs(r).max()
    assert np.abs(r.reshape(-1, 3)[inner]).max() < 1e-10 * scale
