import json

import numpy as np
import pytest

from qsweld.beltrami import bump_field, solve_beltrami
from qsweld.errors import (DimensionMismatch, IllConditioned, MissingSample,
                           RealOnlyInvariant)
from qsweld.grids import GridSpec
from qsweld.holotest import (HoloVerdict, Stencil, cr_residual,
                             holomorphy_report)


def build_manifest(func, center=0j, radii=(0.05, 0.1), angles=8,
                   key="invariants"):
    ts = Stencil.t_values(center, radii, angles)
    samples = []
    for t in ts:
        v = np.atleast_1d(np.asarray(func(t), dtype=complex))
        samples.append({"t": [t.real, t.imag],
                        key: [[x.real, x.imag] for x in v]})
    return {"stencil": {"center": [center.real, center.imag],
                        "radii": list(radii), "angles_per_ring": angles},
            "samples": samples}


# -- cr_residual --------------------------------------------------------------

def test_polynomial_exactness():
    for f in (lambda t: np.array([t ** 2]),
              lambda t: np.array([1.0 + 0j, 2j * t, t * t - 0.5])):
        v = cr_residual(Stencil.from_function(f, 0.2 - 0.1j, (0.05, 0.1)))
        assert v.cr_residual < 1e-12
        assert v.morera_residual < 1e-12
        assert v.passed


def test_antiholomorphic_fails():
    v = cr_residual(Stencil.from_function(lambda t: np.array([np.conj(t)]),
                                          0j, (0.05, 0.1)))
    assert not v.passed
    assert v.cr_residual > 1e6


def test_sensitivity_to_contamination():
    for delta in (1e-2, 1e-4, 1e-6):
        v = cr_residual(Stencil.from_function(
            lambda t: np.array([t + delta * np.conj(t)]), 0j, (0.05, 0.1)))
        assert delta / 2 < v.cr_residual < delta * 2


def test_scale_invariance():
    def f(t):
        return np.array([np.exp(t), t ** 2 - 0.3])

    v1 = cr_residual(Stencil.from_function(f, 0j, (0.05, 0.1)))
    v2 = cr_residual(Stencil.from_function(lambda t: (3 - 4j) * f(t),
                                           0j, (0.05, 0.1)))
    assert abs(v1.cr_residual - v2.cr_residual) <= 1e-12 \
        + 1e-6 * v1.cr_residual
    assert abs(v1.morera_residual - v2.morera_residual) <= 1e-12 \
        + 1e-6 * v1.morera_residual


def test_stencil_requirements():
    with pytest.raises(IllConditioned):
        cr_residual(Stencil.from_function(lambda t: np.array([t]),
                                          0j, (0.1,)))
    with pytest.raises(IllConditioned):
        cr_residual(Stencil.from_function(lambda t: np.array([t]),
                                          0j, (0.05, 0.1), 4))


def test_missing_sample_detected():
    st = Stencil.from_function(lambda t: np.array([t]), 0j, (0.05, 0.1))
    bad = dict(st.samples)
    bad.pop(sorted(bad, key=abs)[-1])
    with pytest.raises(MissingSample):
        cr_residual(Stencil(0j, (0.05, 0.1), 8, bad))


def test_solver_family_is_holomorphic():
    # samples generated by the Beltrami solver at scaled fields
    grid = GridSpec(2.0, 128)
    nu = bump_field(grid, 0.2 + 0.1j, 0.5, 0.65)
    probes = np.array([0.3 + 0.4j, -0.6 + 0.1j, 1.2 - 0.3j])

    def f(t):
        return solve_beltrami(nu.scaled(t), tol=1e-11).at(probes)

    v = cr_residual(Stencil.from_function(f, 0j, (0.025, 0.05)))
    assert v.passed
    assert v.cr_residual < 1e-3


# -- holomorphy_report --------------------------------------------------------

def test_report_constant_family_noise_floor():
    man = build_manifest(lambda t: np.array([0.7 + 0.2j]))
    verdict, prov = holomorphy_report(man)
    assert verdict.passed
    # for a constant family the fitted A vanishes too; the eps-regularized
    # ratio sits at the noise floor rather than machine zero
    assert verdict.cr_residual < 1e-6
    assert prov["pass"] is True
    assert prov["inputs"]


def test_report_refuses_real_only_selector():
    man = build_manifest(lambda t: np.array([1.25 + 0j]))
    with pytest.raises(RealOnlyInvariant):
        holomorphy_report(man)


def test_report_missing_selector():
    man = build_manifest(lambda t: np.array([t]))
    with pytest.raises(MissingSample):
        holomorphy_report(man, invariant_selector="other")


def test_report_dimension_mismatch():
    man = build_manifest(lambda t: np.array([t]))
    man["samples"][3]["invariants"].append([0.0, 1.0])
    with pytest.raises(DimensionMismatch):
        holomorphy_report(man)


def test_report_roundtrips_through_file(tmp_path):
    man = build_manifest(lambda t: np.array([t ** 2 + 1j]))
    p = tmp_path / "family.json"
    p.write_text(json.dumps(man))
    verdict, prov = holomorphy_report(str(p))
    assert isinstance(verdict, HoloVerdict)
    assert verdict.passed
    doc = verdict.to_json()
    assert set(doc) >= {"cr", "morera", "pass", "thresholds", "components"}
