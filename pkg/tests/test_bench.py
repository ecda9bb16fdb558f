import numpy as np
import pytest
import sympy as sp

from vemlattice import bench
from vemlattice.materials import lame_parameters
from vemlattice.mesh import single_inclusion_mesh


def sympy_alpha(problem):
    """Solve u = A r (r < a), u = B r + C / r (r > a) with u(b) = b,
    continuity of u and of sigma_rr at r = a."""
    A, B, Cc, r = sp.symbols("A B C r")
    l1, l2 = lame_parameters(problem.inclusion), lame_parameters(problem.matrix)
    a, b = sp.nsimplify(problem.a), sp.nsimplify(problem.b)
    lam1, mu1, lam2, mu2 = map(sp.Float, (l1.lam, l1.mu, l2.lam, l2.mu), [30] * 4)
    u_in, u_out = A * r, B * r + Cc / r

    def srr(u, lam, mu):
        return (lam + 2 * mu) * sp.diff(u, r) + lam * u / r

    sol = sp.solve([u_out.subs(r, b) - b, (u_in - u_out).subs(r, a),
                    (srr(u_in, lam1, mu1) - srr(u_out, lam2, mu2)).subs(r, a)], [A, B, Cc])
    return sol, (u_in.subs(sol), u_out.subs(sol), r)


@pytest.mark.parametrize("eta", [1.0, 10.0, 100.0, 0.1])
def test_exact_solution_against_symbolic(eta):
    p = bench.BimaterialProblem(eta=eta)
    sol, (ui, uo, r) = sympy_alpha(p)
    for rv in (0.05, 0.2, 0.25, 0.5, 0.9, 1.0):
        expr = ui if rv <= p.a else uo
        assert float(p.displacement(rv)) == pytest.approx(float(expr.subs(r, rv)), rel=1e-12)


@pytest.mark.parametrize("eta", [1.0, 10.0, 100.0])
def test_exact_self_consistency(eta):
    p = bench.BimaterialProblem(eta=eta)
    a = p.a
    assert abs(p.displacement(a, "inclusion") - p.displacement(a, "matrix")) < 1e-14
    s_in = p.stress(np.array([a]), "inclusion")[0][0]
    s_out = p.stress(np.array([a]), "matrix")[0][0]
    assert s_in == pytest.approx(s_out, rel=1e-12)
    assert float(p.displacement(p.b)) == pytest.approx(p.b)
    srr = p.stress(np.linspace(0, 0.9 * a, 7))[0]
    np.testing.assert_allclose(srr, srr[0], rtol=1e-14)
    with pytest.raises(ValueError):
        p.displacement(1.5)


def test_eta_one_is_affine():
    p = bench.BimaterialProblem(eta=1.0)
    assert p.alpha == pytest.approx(1.0)
    pts = np.random.default_rng(0).uniform(-0.7, 0.7, (20, 2))
    np.testing.assert_allclose(p.displacement_field(pts), pts, rtol=1e-14)
    srr, stt = p.stress(np.array([0.1, 0.6]))
    np.testing.assert_allclose(srr, stt)


def test_fan_quadrature_exact_for_quadratics():
    m = single_inclusion_mesh()
    for e in range(2):
        pts, w = bench.fan_quadrature(m.element_coords(e))
        assert w.sum() == pytest.approx(m.areas[e], rel=1e-13)
        c = (w @ pts) / w.sum()
        np.testing.assert_allclose(c, m.centroids[e], rtol=1e-12)
    # integral of x^2 over unit square
    pts, w = bench.fan_quadrature([np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])])
    assert w @ pts[:, 0] ** 2 == pytest.approx(1 / 3)


def test_radial_stress_helper():
    pts = np.array([[1.0, 0], [0, 2.0], [0, 0.0]])
    sig = np.array([[1.0, 2.0, 0.5], [1.0, 2.0, 0.5], [1.0, 3.0, 0.0]])
    np.testing.assert_allclose(bench.radial_stress(pts, sig), [1.0, 2.0, 2.0])


@pytest.fixture(scope="module")
def coarse():
    return bench.patch_discretization(0.2, 0, "coarse")


def test_patch_vem_and_septagon(coarse):
    r = bench.run_patch_test(coarse, "vem")
    assert r.rel_l2 < 1e-12 and r.stress_error < 1e-10
    sept = bench.Discretization("septagon", None, single_inclusion_mesh(), None)
    for E, nu in [(1.0, 0.3), (7.5, 0.0), (0.2, 0.45), (3.0, -0.5)]:
        r = bench.run_patch_test(sept, "vem", bench.MaterialPhase(E, nu))
        assert r.rel_l2 < 1e-12 and r.stress_error < 1e-10


def test_patch_vclm(coarse):
    r = bench.run_patch_test(coarse, "vclm", springs="equal")
    assert r.rel_l2 < 1e-12 and r.stress_error < 1e-8
    r = bench.run_patch_test(coarse, "vclm", springs="calibrated")
    assert 1e-3 <= r.rel_l2 <= 1e-1


def test_error_scales_linearly(coarse):
    r1 = bench.run_patch_test(coarse, "vclm", springs="calibrated", amplitude=1.0)
    r2 = bench.run_patch_test(coarse, "vclm", springs="calibrated", amplitude=3.0)
    assert r2.abs_l2 == pytest.approx(3 * r1.abs_l2, rel=1e-10)
    assert r2.rel_l2 == pytest.approx(r1.rel_l2, rel=1e-10)


def test_inclusion_eta_one_stresses():
    p = bench.BimaterialProblem(eta=1.0)
    res = bench.run_inclusion_benchmark(p, 0.12, 0)
    sig = res.solutions["vem"].stresses()
    np.testing.assert_allclose(sig[:, 0], sig[:, 1], atol=1e-10 * np.abs(sig).max())
    np.testing.assert_allclose(sig[:, 2], 0, atol=1e-10 * np.abs(sig).max())
    assert res.reports[0].rel_l2 < 1e-9 and res.reports[1].rel_l2 < 1e-8
    prof = res.profiles["vem"]
    assert prof.shape[1] == 3 and np.all(np.diff(prof[:, 0]) >= 0)


def test_three_phase_zero_strain():
    spec = bench.PorousConcrete(n_cols=3, n_rows=3)
    res = bench.run_three_phase(spec, applied_strain=0.0, spacing=0.15)
    for model in ("vem", "vclm"):
        assert np.all(res.solutions[model].stresses() == 0)


def test_three_phase_small():
    spec = bench.PorousConcrete(n_cols=3, n_rows=3)
    res = bench.run_three_phase(spec, spacing=0.12)
    mesh = res.disc.mesh
    assert set(mesh.phase_ids.tolist()) == {1, 2}
    width, height, *_ = spec.layout()
    assert mesh.areas.sum() < width * height       # pores removed
    for model in ("vem", "vclm"):
        top, bottom, imbalance = res.reaction_balance[model]
        assert top < 0 < bottom and imbalance < 1e-10
        assert res.compressive_fraction[model] >= 0.95
        assert res.solutions[model].equilibrium() < 1e-10
