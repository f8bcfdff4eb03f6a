"""Uniform complex grids, Beltrami fields, gridded plane maps, and their
binary/CSV serialization.

Grid convention: an N x N grid over [-L, L]^2 with x_j = -L + 2L*j/N (no
duplicated endpoint, FFT friendly).  Array layout is values[iy, ix], so a
row is constant y.  The origin is always a grid node; so is z = 1 whenever
N is divisible by 2L.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DegenerateJacobian

GRID_MAGIC = b"QWGR"
GRID_VERSION = 1
KIND_FIELD = 0  # Beltrami coefficient samples
KIND_MAP = 1  # plane map samples


@dataclass(frozen=True)
class GridSpec:
    """Square sampling window: N x N nodes covering [-L, L]^2."""

    half_width: float
    n: int

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.n < 64 or (self.n & (self.n - 1)) != 0:
            raise ValueError("n must be a power of two, at least 64")

    @property
    def cell(self) -> float:
        return 2.0 * self.half_width / self.n

    def axis(self) -> np.ndarray:
        return -self.half_width + self.cell * np.arange(self.n)

    def mesh(self) -> np.ndarray:
        """Complex nodes z[iy, ix] = x[ix] + i*y[iy]."""
        ax = self.axis()
        return ax[None, :] + 1j * ax[:, None]

    def frequencies(self) -> np.ndarray:
        """Complex Fourier frequencies xi[iy, ix] = xi_x + i*xi_y."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.cell)
        return xi[None, :] + 1j * xi[:, None]


class BeltramiField:
    """Gridded complex dilatation with sup|mu| < 1 and compact support.

    Values outside the support disk are zeroed on construction.
    """

    def __init__(self, grid: GridSpec, values, support_radius: float):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.n, grid.n):
            raise ValueError("field shape does not match grid")
        if support_radius <= 0:
            raise ValueError("support_radius must be positive")
        z = grid.mesh()
        values = np.where(np.abs(z) <= support_radius, values, 0.0)
        sup = float(np.max(np.abs(values)))
        if sup >= 1.0:
            raise DegenerateJacobian(f"sup|mu| = {sup:.6f} >= 1")
        self.grid = grid
        self.values = values
        self.support_radius = float(support_radius)
        self.sup = sup

    @classmethod
    def zero(cls, grid: GridSpec) -> "BeltramiField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=complex),
                   grid.half_width / 2.0)

    def scaled(self, factor: complex) -> "BeltramiField":
        return BeltramiField(self.grid, factor * self.values,
                             self.support_radius)

    def __add__(self, other: "BeltramiField") -> "BeltramiField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return BeltramiField(self.grid, self.values + other.values,
                             max(self.support_radius, other.support_radius))


class PlaneMap:
    """Gridded map of the plane; samples w[iy, ix] of w(x_j + i y_i).

    Interpolation is bicubic on the real and imaginary parts.  Discrete
    orientation (Jacobian > 0 on interior cells) can be validated; sample
    injectivity is checked for exact duplicates.
    """

    def __init__(self, grid: GridSpec, values, normalization_tag="custom",
                 validate=False):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.n, grid.n):
            raise ValueError("map shape does not match grid")
        self.grid = grid
        self.values = values
        self.normalization_tag = normalization_tag
        self._re = None
        self._im = None
        if validate:
            self.validate()

    # -- validation -----------------------------------------------------

    def jacobian(self) -> np.ndarray:
        """Centered-difference Jacobian on interior nodes ((N-2)^2 array)."""
        h = self.grid.cell
        v = self.values
        wx = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * h)
        wy = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * h)
        # J = |w_z|^2 - |w_zbar|^2 = Im(conj(w_x) * w_y)
        return np.imag(np.conj(wx) * wy)

    def validate(self, dup_tol=1e-9):
        jac = self.jacobian()
        if np.any(jac <= 0):
            bad = int(np.sum(jac <= 0))
            raise DegenerateJacobian(
                f"{bad} interior cells are not orientation-preserving")
        flat = np.round(self.values / dup_tol)
        _, counts = np.unique(flat, return_counts=True)
        if np.any(counts > 1):
            raise DegenerateJacobian("duplicate image points on sample set")

    # -- evaluation -----------------------------------------------------

    def _splines(self):
        if self._re is None:
            ax = self.grid.axis()
            self._re = RectBivariateSpline(ax, ax, self.values.real.T)
            self._im = RectBivariateSpline(ax, ax, self.values.imag.T)
        return self._re, self._im

    def at(self, z) -> np.ndarray:
        """Bicubic interpolation at complex points (clamped to the window)."""
        z = np.asarray(z, dtype=complex)
        re, im = self._splines()
        x = np.clip(z.real, -self.grid.half_width, self.grid.half_width)
        y = np.clip(z.imag, -self.grid.half_width, self.grid.half_width)
        return re.ev(x, y) + 1j * im.ev(x, y)

    def wirtinger_at(self, z):
        """(w_z, w_zbar) from spline derivatives at complex points."""
        z = np.asarray(z, dtype=complex)
        re, im = self._splines()
        x, y = z.real, z.imag
        wx = re.ev(x, y, dx=1) + 1j * im.ev(x, y, dx=1)
        wy = re.ev(x, y, dy=1) + 1j * im.ev(x, y, dy=1)
        return (wx - 1j * wy) / 2.0, (wx + 1j * wy) / 2.0

    def invert_at(self, targets, seeds=None, n_iter=30, tol=1e-12):
        """Solve w(z) = target by Newton steps on the interpolant."""
        t = np.asarray(targets, dtype=complex)
        z = np.array(seeds if seeds is not None else t, dtype=complex)
        for _ in range(n_iter):
            r = self.at(z) - t
            if np.max(np.abs(r)) < tol:
                break
            fz, fzb = self.wirtinger_at(z)
            det = np.abs(fz) ** 2 - np.abs(fzb) ** 2
            det = np.where(np.abs(det) < 1e-30, 1e-30, det)
            z = z - (np.conj(fz) * r - fzb * np.conj(r)) / det
            lim = self.grid.half_width
            z = np.clip(z.real, -lim, lim) + 1j * np.clip(z.imag, -lim, lim)
        return z


def identity_map(grid: GridSpec) -> PlaneMap:
    return PlaneMap(grid, grid.mesh(), normalization_tag="fix-0-1-inf")


def normalize_plane_map(pm: PlaneMap) -> PlaneMap:
    """Affine renormalization so that w(0) = 0 and w(1) = 1."""
    w0 = complex(pm.at(0.0 + 0.0j))
    w1 = complex(pm.at(1.0 + 0.0j))
    d = w1 - w0
    if abs(d) < 1e-30:
        raise DegenerateJacobian("cannot normalize: w(1) == w(0)")
    return PlaneMap(pm.grid, (pm.values - w0) / d,
                    normalization_tag="fix-0-1-inf")


# -- serialization ------------------------------------------------------

_HEADER = struct.Struct("<4sIId B")
# magic, version u32, N u32, L f64, kind u8


def write_grid_container(path, grid: GridSpec, values, kind: int):
    values = np.asarray(values, dtype=complex)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(GRID_MAGIC, GRID_VERSION, grid.n,
                              grid.half_width, kind))
        inter = np.empty((grid.n, grid.n, 2), dtype="<f8")
        inter[..., 0] = values.real
        inter[..., 1] = values.imag
        fh.write(inter.tobytes())


def read_grid_container(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, n, half_width, kind = _HEADER.unpack(head)
        if magic != GRID_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != GRID_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    grid = GridSpec(half_width, int(n))
    pairs = raw.reshape(n, n, 2)
    return kind, grid, pairs[..., 0] + 1j * pairs[..., 1]


def save_field(path, field: BeltramiField):
    write_grid_container(path, field.grid, field.values, KIND_FIELD)


def load_field(path) -> BeltramiField:
    kind, grid, values = read_grid_container(path)
    if kind != KIND_FIELD:
        raise ValueError(f"{path}: container holds a map, not a field")
    z = np.abs(grid.mesh())
    nz = np.abs(values) > 0
    support = float(np.max(z[nz])) if np.any(nz) else grid.cell
    return BeltramiField(grid, values, support + grid.cell)


def save_map(path, pm: PlaneMap):
    write_grid_container(path, pm.grid, pm.values, KIND_MAP)


def load_map(path) -> PlaneMap:
    kind, grid, values = read_grid_container(path)
    if kind != KIND_MAP:
        raise ValueError(f"{path}: container holds a field, not a map")
    return PlaneMap(grid, values)


def grid_to_csv(path, grid: GridSpec, values):
    """CSV export (x, y, re, im); '.' decimal, ',' separator, '#' header."""
    values = np.asarray(values, dtype=complex)
    z = grid.mesh()
    with open(path, "w") as fh:
        fh.write("# x,y,re,im\n")
        for iy in range(grid.n):
            for ix in range(grid.n):
                fh.write(f"{z[iy, ix].real:.17g},{z[iy, ix].imag:.17g},"
                         f"{values[iy, ix].real:.17g},"
                         f"{values[iy, ix].imag:.17g}\n")


def polyline_to_csv(path, points):
    """CSV export (index, re, im) of a complex polyline."""
    points = np.asarray(points, dtype=complex)
    with open(path, "w") as fh:
        fh.write("# index,re,im\n")
        for k, p in enumerate(points):
            fh.write(f"{k},{p.real:.17g},{p.imag:.17g}\n")


def polyline_from_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#")
    data = np.atleast_2d(data)
    return data[:, 1] + 1j * data[:, 2]
