import numpy as np
import pytest

from qsweld.errors import DegenerateJacobian
from qsweld.grids import (BeltramiField, GridSpec, PlaneMap, grid_to_csv,
                          identity_map, load_field, load_map,
                          normalize_plane_map, polyline_from_csv,
                          polyline_to_csv, save_field, save_map)


def test_grid_nodes_contain_zero_and_one():
    grid = GridSpec(2.0, 128)
    ax = grid.axis()
    assert 0.0 in ax and 1.0 in ax
    assert ax[0] == -2.0 and ax[-1] == 2.0 - grid.cell


def test_grid_rejects_bad_n():
    with pytest.raises(ValueError):
        GridSpec(2.0, 100)
    with pytest.raises(ValueError):
        GridSpec(2.0, 32)


def test_field_zeroed_outside_support():
    grid = GridSpec(2.0, 64)
    vals = np.full((64, 64), 0.5 + 0j)
    f = BeltramiField(grid, vals, 1.0)
    z = grid.mesh()
    assert np.all(f.values[np.abs(z) > 1.0] == 0)
    assert f.sup == 0.5


def test_field_rejects_sup_at_one():
    grid = GridSpec(2.0, 64)
    with pytest.raises(DegenerateJacobian):
        BeltramiField(grid, np.ones((64, 64), dtype=complex), 1.0)


def test_planemap_interpolation_matches_samples():
    grid = GridSpec(2.0, 64)
    z = grid.mesh()
    pm = PlaneMap(grid, z + 0.1 * z ** 2)
    pts = np.array([0.3 + 0.2j, -0.5 + 0.1j, 1.0 + 0j])
    assert np.max(np.abs(pm.at(pts) - (pts + 0.1 * pts ** 2))) < 1e-6


def test_planemap_validate_catches_folding():
    grid = GridSpec(2.0, 64)
    z = grid.mesh()
    with pytest.raises(DegenerateJacobian):
        PlaneMap(grid, np.conj(z), validate=True)


def test_planemap_inversion():
    grid = GridSpec(2.0, 128)
    z = grid.mesh()
    pm = PlaneMap(grid, z + 0.2 * np.sin(z.real) + 0.1j * z.imag ** 2 / 2)
    targets = np.array([0.4 + 0.3j, -0.2 - 0.5j])
    back = pm.invert_at(targets)
    assert np.max(np.abs(pm.at(back) - targets)) < 1e-9


def test_normalization_fixes_zero_and_one():
    grid = GridSpec(2.0, 64)
    z = grid.mesh()
    pm = normalize_plane_map(PlaneMap(grid, 2.0 * z + 0.7))
    assert abs(pm.at(0j)) < 1e-12
    assert abs(pm.at(1 + 0j) - 1.0) < 1e-12


def test_normalization_idempotent():
    grid = GridSpec(2.0, 64)
    z = grid.mesh()
    pm = normalize_plane_map(PlaneMap(grid, (1.3 - 0.2j) * z + 0.4j))
    pm2 = normalize_plane_map(pm)
    assert np.max(np.abs(pm2.values - pm.values)) < 1e-13


def test_container_roundtrip(tmp_path):
    grid = GridSpec(1.5, 64)
    z = grid.mesh()
    pm = PlaneMap(grid, z ** 2 + 1j)
    p = tmp_path / "m.qwgr"
    save_map(p, pm)
    pm2 = load_map(p)
    assert pm2.grid == grid
    assert np.array_equal(pm2.values, pm.values)

    f = BeltramiField(grid, 0.3 * np.exp(1j * z.real), 0.7)
    pf = tmp_path / "f.qwgr"
    save_field(pf, f)
    f2 = load_field(pf)
    assert np.array_equal(f2.values, f.values)
    with pytest.raises(ValueError):
        load_field(p)
    with pytest.raises(ValueError):
        load_map(pf)


def test_container_header_layout(tmp_path):
    grid = GridSpec(1.0, 64)
    p = tmp_path / "h.qwgr"
    save_map(p, identity_map(grid))
    raw = p.read_bytes()
    assert raw[:4] == b"QWGR"
    assert len(raw) == 21 + 64 * 64 * 16


def test_csv_format(tmp_path):
    grid = GridSpec(1.0, 64)
    p = tmp_path / "g.csv"
    grid_to_csv(p, grid, grid.mesh())
    lines = p.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1].count(",") == 3
    q = tmp_path / "poly.csv"
    pts = np.exp(1j * np.linspace(0, 2 * np.pi, 100, endpoint=False))
    polyline_to_csv(q, pts)
    back = polyline_from_csv(q)
    assert np.max(np.abs(back - pts)) < 1e-15
