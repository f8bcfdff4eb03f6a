import numpy as np
import pytest

from qsweld.beltrami import dilatation, radial_stretch_map
from qsweld.circlemaps import identity_circle_map, sine_perturbation
from qsweld.errors import BudgetExceeded, CutoutEscapes, MonotonicityLost
from qsweld.grids import GridSpec, PlaneMap, identity_map
from qsweld.holotest import Stencil, cr_residual
from qsweld.motions import (CutoutFamily, embed_in_motion,
                            family_of_cutouts, rigging_family)

GRID = GridSpec(4.0, 256)


@pytest.fixture(scope="module")
def stretch_motion():
    u = PlaneMap(GRID, radial_stretch_map(GRID.mesh(), 0.3))
    return u, embed_in_motion(u)


def test_identity_embeds_trivially():
    fam = embed_in_motion(identity_map(GRID))
    for t in (0j, 0.3 + 0.2j, -0.5j):
        w = fam.sample(t)
        assert np.max(np.abs(w.values - GRID.mesh())) < 1e-10


def test_motion_starts_at_identity(stretch_motion):
    _, fam = stretch_motion
    w0 = fam.sample(0j)
    assert np.max(np.abs(w0.values - GRID.mesh())) < 1e-12


def test_motion_recovers_input(stretch_motion):
    u, fam = stretch_motion
    assert abs(fam.t_star - (fam.k + 1) / 2) < 1e-12
    ut = fam.sample(fam.t_star)
    mask = np.abs(GRID.mesh()) <= 2.0
    # scales with the grid cell; the acceptance run at N=1024 meets 5e-3
    assert np.max(np.abs(ut.values[mask] - u.values[mask])) < 1.5e-2


def test_motion_field_bound(stretch_motion):
    _, fam = stretch_motion
    for t in (0.1, 0.3 + 0.2j, 0.6j):
        assert fam.field_sup(t) <= abs(t) + 1e-12


def test_motion_dilatation_budget(stretch_motion):
    _, fam = stretch_motion
    z = GRID.mesh()
    for t in (0.1, 0.3, 0.5):
        w = fam.sample(t)
        mu = dilatation(w)
        sup = float(np.max(np.abs(mu.values[np.abs(z) < 1.8])))
        k_meas = (1 + sup) / (1 - sup)
        assert k_meas <= (1 + t) / (1 - t) + 0.05


def test_motion_budget_exceeded():
    z = GRID.mesh()
    vals = np.where(np.abs(z) < 1, z + 0.95 * np.conj(z), z)
    # smooth the jump so validation passes but the budget still trips
    u = PlaneMap(GRID, z + 0.95 * np.conj(z)
                 * np.exp(-np.abs(z) ** 2))
    with pytest.raises(BudgetExceeded):
        embed_in_motion(u)


def test_motion_holomorphic_in_t(stretch_motion):
    _, fam = stretch_motion
    probes = np.array([0.5 + 0.2j, -0.7j, 1.3 + 0.1j, -1.1 - 0.4j,
                       0.2 + 0.9j])

    def f(t):
        return fam.sample(t, tol=1e-10).at(probes)

    verdict = cr_residual(Stencil.from_function(f, 0j, (0.015, 0.03)))
    assert verdict.passed
    assert verdict.cr_residual < 1e-3


# -- rigging families ---------------------------------------------------------

def test_rigging_family_zero_direction():
    base = sine_perturbation(0.2, 128)
    fam = rigging_family(base, {}, 0.3)
    for t in (0j, 0.2, -0.1j):
        got = fam.sample(t)
        assert np.max(np.abs(got.lift_samples - base.lift_samples)) == 0


def test_rigging_family_single_mode_valid():
    fam = rigging_family(identity_circle_map(128), {2: 0.15 + 0.1j}, 0.2)
    for ang in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        cm = fam.sample(0.2 * np.exp(1j * ang))
        assert np.all(np.diff(cm.lift_samples) > 0)


def test_rigging_family_lift_affine_in_t():
    fam = rigging_family(identity_circle_map(128), {1: 0.1, 3: 0.05j}, 0.2)
    th = np.linspace(0, 2 * np.pi, 37)
    t1, t2 = 0.05 + 0.1j, -0.12 + 0.02j
    lift_mid = fam.lift_at((t1 + t2) / 2, th)
    assert np.max(np.abs((fam.lift_at(t1, th) + fam.lift_at(t2, th)) / 2
                         - lift_mid)) < 1e-14


def test_rigging_family_monotonicity_lost():
    with pytest.raises(MonotonicityLost):
        rigging_family(identity_circle_map(128), {1: 1.0}, 1.5)


# -- cut-out families ---------------------------------------------------------

def test_cutout_zero_velocity_is_identity():
    fam = family_of_cutouts(CutoutFamily(0.3 + 0j, 0.2, 0j, 0.5),
                            GridSpec(2.0, 128))
    for t in (0j, 0.3, 0.2j):
        pm = fam.comparison_map(t)
        assert np.max(np.abs(pm.values - pm.grid.mesh())) == 0


def test_cutout_escape_check():
    with pytest.raises(CutoutEscapes):
        family_of_cutouts(CutoutFamily(0j, 0.2, 1.0, 0.5),
                          GridSpec(2.0, 128))


def test_cutout_identity_off_annulus():
    fam = family_of_cutouts(CutoutFamily(0j, 0.2, 0.3, 0.5),
                            GridSpec(2.0, 128))
    z = fam.grid.mesh()
    pm = fam.comparison_map(0.4)
    outside = np.abs(z) > 0.61
    assert np.max(np.abs((pm.values - z)[outside])) == 0


def test_cutout_boundary_displacement_exact():
    c = 0.3 + 0.1j
    fam = family_of_cutouts(CutoutFamily(0.1j, 0.2, c, 0.5),
                            GridSpec(2.0, 128))
    th = np.linspace(0, 2 * np.pi, 64)
    rim = 0.1j + 0.2 * np.exp(1j * th)
    for t in (0.2, -0.3j):
        got = fam.comparison_values(t, rim)
        assert np.max(np.abs(got - (rim + t * c))) < 1e-12


def test_cutout_motion_holomorphic():
    fam = family_of_cutouts(CutoutFamily(0j, 0.2, 0.25, 0.5),
                            GridSpec(2.0, 128))
    probes = np.array([0.25 + 0j, 0.1 + 0.3j, -0.4j])

    def f(t):
        return fam.comparison_values(t, probes)

    verdict = cr_residual(Stencil.from_function(f, 0j, (0.1, 0.2)))
    assert verdict.passed and verdict.cr_residual < 1e-12


def test_cutout_dilatation_holomorphic_in_t():
    fam = family_of_cutouts(CutoutFamily(0j, 0.2, 0.25, 0.5),
                            GridSpec(2.0, 256))
    z = fam.grid.mesh()
    sel = np.where((np.abs(z) > 0.25) & (np.abs(z) < 0.55))
    pick = (sel[0][::211], sel[1][::211])

    def f(t):
        mu = fam.comparison_dilatation(t)
        return mu.values[pick]

    verdict = cr_residual(Stencil.from_function(f, 0j, (0.05, 0.1)))
    assert verdict.cr_residual < 1e-2  # holomorphic, not affine, in t
