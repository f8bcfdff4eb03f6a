"""Smaller cross-module contract checks."""

import json
import os

import numpy as np
import pytest

from conftest import make_four_boundary
from qsweld.beltrami import bump_field, solve_beltrami
from qsweld.circlemaps import qs_constant_line, sine_perturbation
from qsweld.cli import run
from qsweld.errors import DegenerateRatio
from qsweld.grids import GridSpec
from qsweld.surfaces import RiggedSurface
from qsweld.welding import weld, welding_residual


def test_qs_degenerate_ratio():
    with pytest.raises(DegenerateRatio):
        qs_constant_line(lambda x: x ** 3, 256, decades=6.0)


def test_welding_residual_consistent_with_result():
    h = sine_perturbation(0.3, 256)
    res = weld(h, GridSpec(2.0, 256), tol=1e-3)
    again = welding_residual(res, h)
    assert abs(again - res.residual) <= 0.1 * res.residual + 1e-15


def test_rigged_surface_json_roundtrip():
    x = make_four_boundary(m=64)
    doc = x.to_json()
    y = RiggedSurface.from_json(doc)
    assert len(y.disks) == 4
    assert y.disks[3].exterior
    assert y.orientations == x.orientations
    for a, b in zip(x.riggings, y.riggings):
        assert np.max(np.abs(a.lift_samples - b.lift_samples)) < 1e-12
    assert json.loads(doc)["marking"] is None


def test_rigged_surface_rejects_overlap():
    from qsweld.surfaces import Disk
    from qsweld.circlemaps import identity_circle_map
    with pytest.raises(ValueError):
        RiggedSurface([Disk(0j, 0.5), Disk(0.6 + 0j, 0.5)],
                      [identity_circle_map(64)] * 2, ["in", "out"])


def test_cli_solver_error_exits_three(tmp_path):
    code = run({
        "command": "motion",
        "grid": {"half_width": 4.0, "n": 128},
        "inputs": {"u": "radial_stretch", "k": 0.93},
        "output_dir": str(tmp_path),
        "seed": 0,
    })
    assert code == 3
    diag = json.loads((tmp_path / "error.json").read_text())
    # the steep stretch either trips the motion budget or degenerates the
    # finite-difference dilatation first; both are internal solver errors
    assert diag["error"] in ("BudgetExceeded", "DegenerateJacobian")


def test_thread_env_does_not_change_results(monkeypatch):
    grid = GridSpec(2.0, 128)
    nu = bump_field(grid, 0.1, 0.5, 0.5)
    monkeypatch.delenv("QSWELD_THREADS", raising=False)
    w1 = solve_beltrami(nu, tol=1e-11)
    monkeypatch.setenv("QSWELD_THREADS", "2")
    w2 = solve_beltrami(nu, tol=1e-11)
    assert np.max(np.abs(w1.values - w2.values)) < 1e-13
