import numpy as np
import pytest

from qsweld.beltrami import dilatation
from qsweld.circlemaps import (identity_circle_map, make_circle_map,
                               rotation_map, sine_perturbation)
from qsweld.errors import ResidualTooLarge, SelfIntersecting
from qsweld.grids import GridSpec, PlaneMap
from qsweld.mobius import cross_ratio
from qsweld.welding import (WeldingResult, boundary_trace, quasicircle_check,
                            weld, welding_residual)

GRID = GridSpec(2.0, 256)


def mobius_boundary_map(a: float, m: int = 512):
    """Boundary values of the disk automorphism (z - a)/(1 - a z)."""
    th = np.linspace(0, 2 * np.pi, m)
    z = np.exp(1j * th)
    return make_circle_map(np.unwrap(np.angle((z - a) / (1 - a * z))))


@pytest.fixture(scope="module")
def sine_weld():
    return weld(sine_perturbation(0.3, 512), GRID, tol=1e-3)


def test_identity_weld(sine_weld):
    res = weld(identity_circle_map(256), GRID, tol=1e-6)
    assert res.residual < 1e-6
    assert np.max(np.abs(np.abs(res.seam) - 1.0)) < 1e-6


def test_rotation_weld():
    res = weld(rotation_map(0.7, 256), GRID, tol=1e-6)
    assert res.residual < 1e-6
    assert np.max(np.abs(np.abs(res.seam) - 1.0)) < 1e-6


def test_sine_weld_residual(sine_weld):
    assert sine_weld.residual < 1e-3


def test_welding_residual_of_symbolic_pair():
    # exact Mobius pair (F, G) = (m_a, id): G^{-1} o F is m_a by definition
    a = 0.3
    h = mobius_boundary_map(a)
    z = GRID.mesh()
    F = PlaneMap(GRID, (z - a) / (1 - a * z))
    G = PlaneMap(GRID, z.copy())
    seam = np.exp(1j * np.linspace(0, 2 * np.pi, 512, endpoint=False))
    res = WeldingResult(F=F, G=G, seam=seam, residual=0.0)
    # identity by construction; only grid interpolation noise remains
    assert welding_residual(res, h, samples=512) < 1e-4


def test_welding_residual_detects_rotation_offset():
    res = weld(identity_circle_map(256), GRID, tol=1e-6)
    eps = 1e-3
    bumped = WeldingResult(F=res.F,
                           G=PlaneMap(GRID, np.exp(1j * eps) * res.G.values),
                           seam=res.seam, residual=res.residual)
    r = welding_residual(bumped, identity_circle_map(256), samples=512)
    assert abs(r - eps) < 0.5 * eps


def test_weld_raises_on_unreachable_tolerance():
    with pytest.raises(ResidualTooLarge) as err:
        weld(sine_perturbation(0.3, 512), GRID, tol=1e-12)
    assert err.value.residual > 1e-12


def test_mobius_weld_round_seam_and_cross_ratio():
    a = 0.3
    res = weld(mobius_boundary_map(a), GridSpec(2.0, 512), tol=1e-3)
    # best-fit circle of the seam
    s = res.seam
    c = np.mean(s)
    for _ in range(30):
        d = np.abs(s - c)
        r = np.mean(d)
        c = c + np.mean((s - c) * (1 - r / d))
    assert np.max(np.abs(np.abs(s - c) - r)) < 5e-3 * r
    # boundary cross-ratios must match the symbolic pair F = m_a, G = id
    marks = np.array([0.3, 1.7, 3.1, 4.9])
    zm = np.exp(1j * marks)
    sym = (zm - a) / (1 - a * zm)
    got = boundary_trace(res.F, marks, "inner")
    cr_sym = cross_ratio(sym[3], sym[0], sym[1], sym[2])
    cr_got = cross_ratio(got[3], got[0], got[1], got[2])
    assert abs(cr_sym - cr_got) < 1e-3


def test_weld_conformality_cancellation(sine_weld):
    # F should be far more conformal than the extension it divides out
    from qsweld.beltrami import dilatation_sup
    z = GRID.mesh()
    sup_f = dilatation_sup(sine_weld.F, np.abs(z) < 0.85)
    sup_g = dilatation_sup(sine_weld.G,
                           (np.abs(z) > 1.15) & (np.abs(z) < 1.8))
    assert sup_f < 5e-3
    assert sup_g < 2e-5


def test_normalization_quotient_cross_ratios(sine_weld):
    # welding rotation o h gives a seam equal up to a Mobius map: compare
    # cross-ratios of four marked seam points
    from qsweld.circlemaps import compose
    h = sine_perturbation(0.3, 512)
    res2 = weld(compose(rotation_map(0.8, 512), h), GRID, tol=1e-3)
    marks = np.array([0.3, 1.7, 3.1, 4.9])
    p1 = boundary_trace(sine_weld.F, marks, "inner")
    p2 = boundary_trace(res2.F, marks, "inner")
    cr1 = cross_ratio(p1[3], p1[0], p1[1], p1[2])
    cr2 = cross_ratio(p2[3], p2[0], p2[1], p2[2])
    assert abs(cr1 - cr2) < 1e-3


def test_quasicircle_circle():
    th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    rep = quasicircle_check(np.exp(1j * th))
    # oracle: the arc-chord constant of a circle is pi/2; the chordal
    # three-point statistic is below it (sqrt(2) in the limit)
    assert rep.turning_constant <= np.pi / 2 + 0.05
    assert rep.turning_constant >= 1.0
    assert rep.refinement_stable


def test_quasicircle_ellipse():
    th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    rep = quasicircle_check(2 * np.cos(th) + 1j * np.sin(th))
    assert np.isfinite(rep.turning_constant)
    assert rep.refinement_stable


def test_quasicircle_cusp_flagged():
    th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    pts = np.exp(1j * th)
    pts[1] = 1.6 + pts[1].imag * 1j * 0.02  # thin outward spike
    rep = quasicircle_check(pts)
    assert rep.turning_constant > 10.0
    assert not rep.refinement_stable


def test_quasicircle_self_intersection():
    th = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    fig8 = np.sin(2 * th) * np.exp(1j * th) + 1e-3
    with pytest.raises(SelfIntersecting):
        quasicircle_check(fig8)


def test_seam_of_weld_is_quasicircle(sine_weld):
    rep = quasicircle_check(sine_weld.seam)
    assert rep.turning_constant < 3.0
    assert rep.refinement_stable
