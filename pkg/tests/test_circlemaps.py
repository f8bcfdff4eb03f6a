import numpy as np
import pytest

from qsweld.circlemaps import (CircleMap, annulus_interpolation_extend,
                               beurling_ahlfors_extend, compose,
                               identity_circle_map, invert, make_circle_map,
                               qs_constant, qs_constant_line, reflect,
                               rotation_map, sine_perturbation, sup_distance)
from qsweld.errors import NonMonotone, RadiiOrder, WrongDegree
from qsweld.grids import GridSpec
from qsweld.welding import boundary_trace

TWO_PI = 2 * np.pi


# -- construction -----------------------------------------------------------

def test_identity_construction():
    h = make_circle_map(np.linspace(0, TWO_PI, 64))
    assert h.m == 64
    assert h.basepoint_value == 0.0
    th = np.linspace(0, TWO_PI, 333)
    assert np.allclose(h.lift(th), th, atol=1e-14)


def test_sine_lift_is_valid():
    th = np.linspace(0, TWO_PI, 256)
    h = make_circle_map(th + 0.3 * np.sin(th))
    assert np.all(np.diff(h.lift_samples) > 0)


def test_steep_sine_rejected():
    th = np.linspace(0, TWO_PI, 256)
    with pytest.raises(NonMonotone):
        make_circle_map(th - 1.5 * np.sin(th))


def test_wrong_span_rejected():
    with pytest.raises(WrongDegree):
        make_circle_map(np.linspace(0, TWO_PI + 1e-3, 64))


def test_short_array_rejected():
    with pytest.raises(NonMonotone):
        make_circle_map(np.linspace(0, TWO_PI, 8))


def test_json_roundtrip():
    h = sine_perturbation(0.3, 128)
    h2 = CircleMap.from_json(h.to_json())
    assert sup_distance(h, h2) < 1e-12


# -- algebra ----------------------------------------------------------------

def test_compose_with_identity():
    h = sine_perturbation(0.3, 256)
    assert sup_distance(compose(identity_circle_map(256), h), h) < 1e-12
    assert sup_distance(compose(h, identity_circle_map(256)), h) < 1e-12


def test_invert_rotation():
    r = rotation_map(0.4, 128)
    assert sup_distance(invert(r), rotation_map(-0.4, 128)) < 1e-12


def test_compose_invert_roundtrip():
    h = sine_perturbation(0.3, 1024)
    ident = identity_circle_map(1024)
    assert sup_distance(compose(h, invert(h)), ident) < 1e-6
    assert sup_distance(compose(invert(h), h), ident) < 1e-6


def test_reflect_involution():
    h = sine_perturbation(0.25, 256)
    assert sup_distance(reflect(reflect(h)), h) < 1e-12


# -- quasisymmetry ----------------------------------------------------------

def test_qs_identity_is_one():
    rep = qs_constant(identity_circle_map(128), 128)
    assert abs(rep.k_estimate - 1.0) < 1e-9
    assert rep.cayley_used


def test_qs_affine_line_map_is_one():
    rep = qs_constant_line(lambda x: 2.0 * x, 256)
    assert abs(rep.k_estimate - 1.0) < 1e-12
    assert not rep.cayley_used


def test_qs_cubic_line_map():
    # independent oracle: dense sup of (u^2+3u+3)/(u^2-3u+3) over u > 0
    u = np.exp(np.linspace(-8, 8, 400001))
    oracle = float(np.max((u ** 2 + 3 * u + 3) / (u ** 2 - 3 * u + 3)))
    assert abs(oracle - (7 + 4 * np.sqrt(3))) < 1e-8
    rep = qs_constant_line(lambda x: x ** 3, 512)
    assert abs(rep.k_estimate - oracle) / oracle < 0.02
    assert rep.k_estimate <= oracle * (1 + 1e-9)  # sampled sup is a lower bound


def test_qs_monotone_in_density():
    h = sine_perturbation(0.3, 256)
    k1 = qs_constant(h, 128).k_estimate
    k2 = qs_constant(h, 256).k_estimate
    assert k2 >= k1 - 1e-12


def test_qs_rotation_invariance():
    h = sine_perturbation(0.3, 512)
    k = qs_constant(h, 256).k_estimate
    pre = compose(h, rotation_map(0.9, 512))
    post = compose(rotation_map(-1.3, 512), h)
    assert abs(qs_constant(pre, 256).k_estimate - k) < 0.05 * k
    assert abs(qs_constant(post, 256).k_estimate - k) < 0.05 * k


def test_qs_composition_finite():
    a = sine_perturbation(0.3, 256)
    b = sine_perturbation(-0.2, 256, mode=2)
    rep = qs_constant(compose(a, b), 128)
    assert np.isfinite(rep.k_estimate) and rep.k_estimate >= 1.0


# -- disk extension ---------------------------------------------------------

def test_extension_of_identity_is_identity():
    grid = GridSpec(2.0, 128)
    pm = beurling_ahlfors_extend(identity_circle_map(128), grid)
    assert np.max(np.abs(pm.values - grid.mesh())) < 1e-8


def test_extension_of_rotation_near_conformal():
    grid = GridSpec(2.0, 128)
    pm = beurling_ahlfors_extend(rotation_map(1.1, 128), grid)
    assert pm.max_dilatation < 1.01


def test_extension_boundary_matches_input():
    grid = GridSpec(2.0, 512)
    h = sine_perturbation(0.3, 512)
    pm = beurling_ahlfors_extend(h, grid)
    th = np.linspace(0, TWO_PI, 733, endpoint=False)
    got = boundary_trace(pm, th, "inner")
    want = np.exp(1j * h.lift(th))
    assert np.max(np.abs(got - want)) < 1e-4


def test_extension_boundary_trace_refines():
    h = sine_perturbation(0.3, 512)
    th = np.linspace(0, TWO_PI, 257, endpoint=False)
    want = np.exp(1j * h.lift(th))
    errs = []
    for n in (128, 256):
        pm = beurling_ahlfors_extend(h, GridSpec(2.0, n))
        got = boundary_trace(pm, th, "inner")
        errs.append(np.max(np.abs(got - want)))
    assert errs[1] < errs[0] / 2.5


# -- annulus interpolation extension ---------------------------------------

def test_annulus_identity():
    pm = annulus_interpolation_extend(identity_circle_map(64),
                                      identity_circle_map(64), 0.5, 1.0,
                                      GridSpec(2.0, 128))
    assert np.max(np.abs(pm.values - pm.grid.mesh())) < 1e-12


def test_annulus_rotation_shear_boundary_exact():
    inner = identity_circle_map(64)
    outer = rotation_map(0.8, 64)
    pm = annulus_interpolation_extend(inner, outer, 0.5, 1.0,
                                      GridSpec(2.0, 128))
    th = np.linspace(0, TWO_PI, 64)
    inner_pts = 0.5 * np.exp(1j * th)
    outer_pts = 1.0 * np.exp(1j * th)
    assert np.max(np.abs(pm.evaluate(inner_pts)
                         - 0.5 * np.exp(1j * inner.lift(th)))) < 1e-13
    assert np.max(np.abs(pm.evaluate(outer_pts)
                         - np.exp(1j * outer.lift(th)))) < 1e-13


def test_annulus_radii_order():
    with pytest.raises(RadiiOrder):
        annulus_interpolation_extend(identity_circle_map(64),
                                     identity_circle_map(64), 1.0, 0.5)


def test_annulus_sine_dilatation_bound():
    from qsweld.beltrami import dilatation, maximal_dilatation
    inner = identity_circle_map(256)
    outer = sine_perturbation(0.3, 256)
    sups = []
    for n in (256, 512):
        pm = annulus_interpolation_extend(inner, outer, 0.5, 1.0,
                                          GridSpec(2.0, n))
        z = pm.grid.mesh()
        mask = (np.abs(z) > 0.55) & (np.abs(z) < 0.95)
        mu = dilatation(pm)
        field_sup = float(np.max(np.abs(mu.values[mask])))
        sups.append((1 + field_sup) / (1 - field_sup))
    assert sups[0] < 3.0 and sups[1] < 3.0
    assert abs(sups[1] - sups[0]) < 0.1 * sups[0]
