"""Genus-zero rigged surfaces as circle domains on the sphere chart, the
sewing operation realized through conformal welding, cap sewing, glued
Beltrami fields, conformal invariants, and boundary twists.

Conventions
-----------
A surface is the sphere chart minus finitely many disjoint round disks; a
"disk" may be the exterior of a circle (the removed region containing
infinity).  Each boundary carries a rigging stored as the circle map seen
after the canonical Mobius normalization that maps the surface side of
that boundary onto the unit disk.  With this storage the identification
map of a sewing reduces to circle-map algebra,

    h = reflect(invert(rigging_incoming)) o rigging_outgoing,

and identity riggings give h = id (the analytic degeneration).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .beltrami import solve_beltrami
from .circlemaps import (CircleMap, _DiskExtension, compose,
                         identity_circle_map, invert, reflect)
from .errors import (ChartMismatch, CollarTooWide, NonNested,
                     OrientationMismatch)
from .grids import BeltramiField, GridSpec, PlaneMap
from .mobius import Mobius
from .welding import WeldingResult, boundary_trace, weld

TWO_PI = 2 * np.pi


# -- geometry helpers -------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    """Round disk removed from the sphere chart.

    For exterior=True the removed region is {|z - c| > r} together with
    infinity, so the surface lies inside the circle.
    """

    center: complex
    radius: float
    exterior: bool = False

    def boundary(self, thetas) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * np.asarray(thetas))

    def removed_contains(self, z, margin: float = 0.0) -> np.ndarray:
        d = np.abs(np.asarray(z, dtype=complex) - self.center)
        if self.exterior:
            return d > self.radius - margin
        return d < self.radius + margin

    def surface_to_unit(self) -> Mobius:
        """Mobius sending the surface side of the boundary into the disk."""
        if self.exterior:
            return Mobius(1, -self.center, 0, self.radius)
        return Mobius(0, self.radius, 1, -self.center)

    def removed_to_unit(self) -> Mobius:
        return Mobius.inversion().compose(self.surface_to_unit())


def points_in_polygon(points, poly) -> np.ndarray:
    """Even-odd rule membership for complex points in a closed polyline."""
    p = np.asarray(points, dtype=complex).ravel()
    v = np.asarray(poly, dtype=complex)
    x, y = p.real[:, None], p.imag[:, None]
    x0, y0 = v.real[None, :], v.imag[None, :]
    x1 = np.roll(v.real, -1)[None, :]
    y1 = np.roll(v.imag, -1)[None, :]
    cond = ((y0 <= y) & (y < y1)) | ((y1 <= y) & (y < y0))
    with np.errstate(divide="ignore", invalid="ignore"):
        xin = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = cond & (x < xin)
    inside = np.sum(hits, axis=1) % 2 == 1
    return inside.reshape(np.shape(points))


def circumcircle(z1: complex, z2: complex, z3: complex):
    """Exact circle through three points: (center, radius)."""
    num = (abs(z1) ** 2 * (z2 - z3) + abs(z2) ** 2 * (z3 - z1)
           + abs(z3) ** 2 * (z1 - z2))
    den = (np.conj(z1) * (z2 - z3) + np.conj(z2) * (z3 - z1)
           + np.conj(z3) * (z1 - z2))
    if abs(den) < 1e-30:
        raise ValueError("collinear points have no circumcircle")
    c = num / den
    return c, abs(z1 - c)


def mobius_circle_image(m: Mobius, disk: Disk) -> Disk:
    """Image disk of a removed round region whose image is bounded."""
    pts = [m.apply(disk.center + disk.radius * u) for u in (1, 1j, -1)]
    c, r = circumcircle(*pts)
    probe = m.apply(disk.center + disk.radius * np.exp(0.7j))
    if abs(abs(probe - c) - r) > 1e-7 * max(r, 1.0):
        raise ValueError("Mobius image of a circle should be a circle")
    return Disk(complex(c), float(r), exterior=False)


def best_fit_circle(points, iters: int = 40):
    """Mean-distance circle fit; returns (center, radius, max deviation)."""
    s = np.asarray(points, dtype=complex)
    c = np.mean(s)
    r = np.mean(np.abs(s - c))
    for _ in range(iters):
        d = np.abs(s - c)
        r = np.mean(d)
        c = c + np.mean((s - c) * (1 - r / np.where(d > 0, d, 1)))
    dev = float(np.max(np.abs(np.abs(s - c) - r)))
    return c, r, dev


# -- rigged surfaces --------------------------------------------------------

class RiggedSurface:
    """Circle domain with riggings, orientation tags, and a marking."""

    def __init__(self, disks, riggings, orientations,
                 marking: BeltramiField | None = None):
        disks = list(disks)
        riggings = list(riggings)
        orientations = list(orientations)
        if not (len(disks) == len(riggings) == len(orientations)):
            raise ValueError("disks, riggings, orientations must align")
        if any(o not in ("in", "out") for o in orientations):
            raise ValueError("orientations must be 'in' or 'out'")
        if sum(d.exterior for d in disks) > 1:
            raise ValueError("at most one exterior disk")
        self._check_disjoint(disks)
        if marking is not None:
            vals = marking.values.copy()
            for d in disks:
                vals[d.removed_contains(marking.grid.mesh())] = 0.0
            marking = BeltramiField(marking.grid, vals,
                                    marking.support_radius)
        self.disks = disks
        self.riggings = riggings
        self.orientations = orientations
        self.marking = marking

    @staticmethod
    def _check_disjoint(disks):
        for a in range(len(disks)):
            for b in range(a + 1, len(disks)):
                da, db = disks[a], disks[b]
                if da.exterior:
                    da, db = db, da
                if db.exterior:
                    lim = db.radius - (abs(da.center - db.center) + da.radius)
                else:
                    lim = abs(da.center - db.center) - da.radius - db.radius
                if lim <= 0:
                    raise ValueError(f"removed disks {a} and {b} overlap")

    def with_marking(self, marking: BeltramiField | None) -> "RiggedSurface":
        return RiggedSurface(self.disks, self.riggings, self.orientations,
                             marking)

    def to_json(self, marking_path=None) -> str:
        doc = {
            "disks": [{"c": [d.center.real, d.center.imag], "r": d.radius,
                       "exterior": d.exterior} for d in self.disks],
            "orientations": self.orientations,
            "riggings": [json.loads(r.to_json()) for r in self.riggings],
            "marking": str(marking_path) if marking_path else None,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str, marking: BeltramiField | None = None):
        doc = json.loads(text)
        disks = [Disk(complex(d["c"][0], d["c"][1]), d["r"],
                      bool(d.get("exterior", False))) for d in doc["disks"]]
        riggings = [CircleMap.from_json(json.dumps(r))
                    for r in doc["riggings"]]
        return cls(disks, riggings, doc["orientations"], marking)


def disk_with_identity_rigging(center=0j, radius=1.0, exterior=False,
                               orientation="in", m=256):
    """One-boundary surface (a disk or its complement), identity-rigged."""
    return RiggedSurface([Disk(center, radius, exterior)],
                         [identity_circle_map(m)], [orientation])


def annulus_surface(r_inner: float, r_outer: float,
                    inner_rigging=None, outer_rigging=None,
                    inner_orientation="in", outer_orientation="out",
                    m=256) -> RiggedSurface:
    """Round annulus r_inner < |z| < r_outer as a two-boundary surface."""
    disks = [Disk(0j, r_inner, False), Disk(0j, r_outer, True)]
    riggings = [inner_rigging or identity_circle_map(m),
                outer_rigging or identity_circle_map(m)]
    return RiggedSurface(disks, riggings,
                         [inner_orientation, outer_orientation])


# -- sewing -----------------------------------------------------------------

@dataclass
class BoundaryTrace:
    source: str  # "x" or "y"
    index: int
    disk: Disk
    rigging: CircleMap
    orientation: str
    thetas: np.ndarray
    polyline: np.ndarray


@dataclass
class SewnSurface:
    x: RiggedSurface
    i: int
    y: RiggedSurface
    j: int
    grid: GridSpec
    welding: WeldingResult
    norm_x: Mobius
    norm_y: Mobius
    seam: np.ndarray
    boundaries: list
    chart_disagreement: float
    glued_field: BeltramiField | None = None

    def side_chart(self, source: str):
        """(Mobius, PlaneMap) pair realizing one side: F o A."""
        if source == "x":
            return self.norm_x, self.welding.F
        return self.norm_y, self.welding.G

    def realize(self, source: str, z) -> np.ndarray:
        mob, pm = self.side_chart(source)
        return pm.at(mob.apply(z))

    def chart_derivative(self, source: str, z) -> np.ndarray:
        mob, pm = self.side_chart(source)
        u = mob.apply(z)
        fz, _ = pm.wirtinger_at(u)
        return fz * mob.derivative(z)


def sew(x: RiggedSurface, i: int, y: RiggedSurface, j: int, grid: GridSpec,
        tol: float = 1e-3, boundary_samples: int = 512) -> SewnSurface:
    """Sew boundary i of x (outgoing) to boundary j of y (incoming).

    Both surfaces are normalized internally: boundary i goes to the unit
    circle with x inside the disk, boundary j likewise with y outside.
    The identification map is welded and each side is realized by the
    conformal welding chart.  Seam charts from the two sides must agree
    within 5*tol, else ChartMismatch.
    """
    if x.orientations[i] != "out" or y.orientations[j] != "in":
        raise OrientationMismatch(
            f"need (out, in), got ({x.orientations[i]}, "
            f"{y.orientations[j]})")
    norm_x = x.disks[i].surface_to_unit()
    norm_y = Mobius.inversion().compose(y.disks[j].surface_to_unit())

    margin = 2 * grid.cell
    th = np.linspace(0, TWO_PI, boundary_samples, endpoint=False)
    for k, d in enumerate(x.disks):
        if k == i:
            continue
        im = np.abs(norm_x.apply(d.boundary(th)))
        if np.max(im) > 1.0 - margin:
            raise ValueError(f"x boundary {k} too close to the seam circle")
    for k, d in enumerate(y.disks):
        if k == j:
            continue
        im = np.abs(norm_y.apply(d.boundary(th)))
        if np.min(im) < 1.0 + margin:
            raise ValueError(f"y boundary {k} too close to the seam circle")
        if np.max(im) > grid.half_width - margin:
            raise ValueError(f"y boundary {k} escapes the grid window")

    h = compose(reflect(invert(y.riggings[j])), x.riggings[i])
    wres = weld(h, grid, tol)

    boundaries = []

    def trace(surface, source, norm, pm, k):
        zb = norm.apply(surface.disks[k].boundary(th))
        return BoundaryTrace(source=source, index=k,
                             disk=surface.disks[k],
                             rigging=surface.riggings[k],
                             orientation=surface.orientations[k],
                             thetas=th, polyline=pm.at(zb))

    for k in range(i):
        boundaries.append(trace(x, "x", norm_x, wres.F, k))
    for k in range(j):
        boundaries.append(trace(y, "y", norm_y, wres.G, k))
    for k in range(j + 1, len(y.disks)):
        boundaries.append(trace(y, "y", norm_y, wres.G, k))
    for k in range(i + 1, len(x.disks)):
        boundaries.append(trace(x, "x", norm_x, wres.F, k))

    # seam charts from the two sides must agree at identified points
    th_c = np.linspace(0, TWO_PI, 256, endpoint=False)
    zeta1 = boundary_trace(wres.F, th_c, "inner")
    zeta2 = boundary_trace(wres.G, h.lift(th_c), "outer")
    disagreement = float(np.max(np.abs(zeta1 - zeta2)))
    if disagreement > 5 * tol:
        raise ChartMismatch(
            f"seam charts disagree by {disagreement:.3e} > {5 * tol:.3e}")

    sewn = SewnSurface(x=x, i=i, y=y, j=j, grid=grid, welding=wres,
                       norm_x=norm_x, norm_y=norm_y, seam=wres.seam,
                       boundaries=boundaries,
                       chart_disagreement=disagreement)
    if (x.marking is not None and x.marking.sup > 0) or \
       (y.marking is not None and y.marking.sup > 0):
        sewn.glued_field = glue_markings(x.marking, y.marking, sewn)
    return sewn


def _scatter_field(grid: GridSpec, points, values,
                   seam=None) -> BeltramiField:
    """Linear scatter interpolation of transported field samples."""
    from scipy.interpolate import LinearNDInterpolator
    pts = np.column_stack([np.asarray(points).real,
                           np.asarray(points).imag])
    vals = np.zeros((grid.n, grid.n), dtype=complex)
    if len(pts) >= 4:
        interp_re = LinearNDInterpolator(pts, np.asarray(values).real,
                                         fill_value=0.0)
        interp_im = LinearNDInterpolator(pts, np.asarray(values).imag,
                                         fill_value=0.0)
        z = grid.mesh()
        lo = pts.min(axis=0) - 2 * grid.cell
        hi = pts.max(axis=0) + 2 * grid.cell
        box = ((z.real >= lo[0]) & (z.real <= hi[0])
               & (z.imag >= lo[1]) & (z.imag <= hi[1]))
        zz = z[box]
        vals[box] = interp_re(zz.real, zz.imag) \
            + 1j * interp_im(zz.real, zz.imag)
    if seam is not None and np.any(np.abs(vals) > 0):
        from scipy.spatial import cKDTree
        z = grid.mesh()
        nz = np.abs(vals) > 0
        tree = cKDTree(np.column_stack([seam.real, seam.imag]))
        q = np.column_stack([z[nz].real, z[nz].imag])
        d, _ = tree.query(q)
        cut = vals[nz]
        cut[d < 1.5 * grid.cell] = 0.0
        vals[nz] = cut
    r = np.abs(grid.mesh())
    nz = np.abs(vals) > 0
    support = float(np.max(r[nz])) + grid.cell if np.any(nz) else grid.cell
    if support > grid.half_width / 2.0:
        raise ValueError(
            f"transported field support {support:.3f} exceeds "
            f"half_width/2 = {grid.half_width / 2:.3f}")
    return BeltramiField(grid, vals, support)


def glue_markings(mu: BeltramiField | None, nu: BeltramiField | None,
                  sewn: SewnSurface) -> BeltramiField:
    """Transport the side markings through the realization charts and glue.

    Values at grid points within 1.5 cells of the seam are zeroed (the
    seam is a null set for the solve).  Transport multiplies by the phase
    of the conformal chart derivative.
    """
    points, values = [], []
    for source, field in (("x", mu), ("y", nu)):
        if field is None or field.sup == 0:
            continue
        mask = np.abs(field.values) > 0
        z = field.grid.mesh()[mask]
        v = field.values[mask]
        img = sewn.realize(source, z)
        der = sewn.chart_derivative(source, z)
        phase = der / np.conj(der)
        points.append(img)
        values.append(v * phase)
    if not points:
        return BeltramiField.zero(sewn.grid)
    return _scatter_field(sewn.grid, np.concatenate(points),
                          np.concatenate(values), seam=sewn.seam)


# S_beltrami of the module contract: glue two markings through a sewn base
s_beltrami = glue_markings


def sewn_invariants(sewn: SewnSurface,
                    marking: BeltramiField | None = None) -> np.ndarray:
    """Invariant vector of a sewn realization, optionally deformed.

    Two surviving boundaries: the annulus modulus.  Otherwise the best-fit
    circle data of every surviving boundary after the deformation map.
    """
    polylines = [b.polyline for b in sewn.boundaries]
    if marking is not None and marking.sup > 0:
        w = solve_beltrami(marking)
        polylines = [w.at(p) for p in polylines]
    if len(polylines) == 2:
        inner, outer = orient_annulus(polylines[0], polylines[1])
        return np.array([modulus(inner, outer)], dtype=complex)
    out = []
    for p in polylines:
        c, r, _ = best_fit_circle(p)
        out.extend([c, complex(r)])
    return np.asarray(out, dtype=complex)


def orient_annulus(a: np.ndarray, b: np.ndarray):
    """Order two Jordan polylines as (inner, outer); NonNested if neither."""
    if np.all(points_in_polygon(a, b)):
        return a, b
    if np.all(points_in_polygon(b, a)):
        return b, a
    raise NonNested("boundary polylines are not nested")


# -- conformal modulus by the Dirichlet problem -----------------------------

def _crossing_fractions(starts, step, poly):
    """Fraction of `step` from each start point to its polyline crossing."""
    a = poly
    b = np.roll(poly, -1)
    p = starts[:, None]
    e = b[None, :] - a[None, :]
    # solve p + s*step = a + u*e for s, u in [0, 1]
    sv = np.broadcast_to(step, (len(starts),))[:, None]
    det = sv.real * (-e.imag) + sv.imag * e.real
    rhs = a[None, :] - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (rhs.real * (-e.imag) + rhs.imag * e.real) / det
        u = (sv.real * rhs.imag - sv.imag * rhs.real) / det
    ok = (s > 0) & (s <= 1.0 + 1e-12) & (u >= -1e-12) & (u <= 1 + 1e-12)
    s = np.where(ok, s, np.inf)
    frac = np.min(s, axis=1)
    return frac


def _modulus_once(inner, outer, n: int) -> float:
    """0/1 Dirichlet energy with boundary-fitted (cut-cell) stencils."""
    xs = np.concatenate([inner.real, outer.real])
    ys = np.concatenate([inner.imag, outer.imag])
    pad = 0.05 * max(np.ptp(xs), np.ptp(ys))
    x0, x1 = xs.min() - pad, xs.max() + pad
    y0, y1 = ys.min() - pad, ys.max() + pad
    hx = (x1 - x0) / (n - 1)
    hy = (y1 - y0) / (n - 1)
    gx = x0 + hx * np.arange(n)
    gy = y0 + hy * np.arange(n)
    zz = gx[None, :] + 1j * gy[:, None]
    in_outer = points_in_polygon(zz, outer)
    in_inner = points_in_polygon(zz, inner)
    region = in_outer & ~in_inner
    bc_val = np.where(in_inner, 0.0, np.where(~in_outer, 1.0, 0.0))

    idx = -np.ones(zz.shape, dtype=int)
    m = int(np.sum(region))
    ids = np.arange(m)
    idx[region] = ids
    ry, rx = np.where(region)
    pz = zz[region]

    # fractional leg lengths toward the curves, per direction
    legs = {}
    for name, (dy, dx, h, curve_sel) in {
        "E": (0, 1, hx, None), "W": (0, -1, hx, None),
        "N": (1, 0, hy, None), "S": (-1, 0, hy, None),
    }.items():
        ny, nx = ry + dy, rx + dx
        inside_grid = (ny >= 0) & (ny < n) & (nx >= 0) & (nx < n)
        nbr_region = inside_grid & region[np.clip(ny, 0, n - 1),
                                          np.clip(nx, 0, n - 1)]
        t = np.ones(m)
        val = np.zeros(m)
        cut = ~nbr_region
        if np.any(cut):
            nbr_inner = np.zeros(m, dtype=bool)
            nbr_inner[cut] = in_inner[np.clip(ny[cut], 0, n - 1),
                                      np.clip(nx[cut], 0, n - 1)]
            step = (dx * hx + 1j * dy * hy)
            for curve, wall, v in ((inner, nbr_inner, 0.0),
                                   (outer, cut & ~nbr_inner, 1.0)):
                if np.any(wall):
                    frac = _crossing_fractions(pz[wall], step, curve)
                    frac = np.where(np.isfinite(frac), frac, 1.0)
                    t[wall] = np.clip(frac, 0.05, 1.0)
                    val[wall] = v
        legs[name] = (t, nbr_region, np.where(nbr_region,
                                              idx[np.clip(ny, 0, n - 1),
                                                  np.clip(nx, 0, n - 1)],
                                              -1), val)

    rows, cols, data = [], [], []
    rhs = np.zeros(m)
    center = np.zeros(m)
    for (pos_name, neg_name, h) in (("E", "W", hx), ("N", "S", hy)):
        tp, in_p, col_p, val_p = legs[pos_name]
        tm, in_m, col_m, val_m = legs[neg_name]
        cp = 2.0 / (h * h * tp * (tp + tm))
        cm = 2.0 / (h * h * tm * (tp + tm))
        center += cp + cm
        sel = np.where(in_p)[0]
        rows.append(sel)
        cols.append(col_p[sel])
        data.append(-cp[sel])
        sel2 = np.where(~in_p)[0]
        rhs[sel2] += cp[sel2] * val_p[sel2]
        sel = np.where(in_m)[0]
        rows.append(sel)
        cols.append(col_m[sel])
        data.append(-cm[sel])
        sel2 = np.where(~in_m)[0]
        rhs[sel2] += cm[sel2] * val_m[sel2]
    rows.append(ids)
    cols.append(ids)
    data.append(center)
    mat = coo_matrix((np.concatenate(data),
                      (np.concatenate(rows), np.concatenate(cols))),
                     shape=(m, m)).tocsr()
    sol = spsolve(mat, rhs)
    u = np.zeros(zz.shape)
    u[region] = sol
    u[~in_outer] = 1.0

    # flux through a mid-level band, away from both boundaries
    interior = region.copy()
    interior[1:-1, 1:-1] &= (region[2:, 1:-1] & region[:-2, 1:-1]
                             & region[1:-1, 2:] & region[1:-1, :-2])
    ux = np.zeros_like(u)
    uy = np.zeros_like(u)
    ux[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2 * hx)
    uy[1:-1, :] = (u[2:, :] - u[:-2, :]) / (2 * hy)
    band = interior & (u > 0.25) & (u < 0.75)
    if np.sum(band) < 100:
        band = interior
        lo, hi = 0.0, 1.0
    else:
        lo, hi = 0.25, 0.75
    energy = np.sum((ux[band] ** 2 + uy[band] ** 2)) * hx * hy
    flux = energy / (hi - lo)
    return 1.0 / flux


def _decimate_closed(poly, max_points: int = 384) -> np.ndarray:
    stride = max(1, len(poly) // max_points)
    return poly[::stride]


def modulus(inner, outer, n: int = 281) -> float:
    """Conformal modulus of the doubly connected region between polylines.

    Convention: a round annulus r < |z| < R has modulus log(R/r)/(2*pi).
    The 0/1 Dirichlet problem is discretized with boundary-fitted
    stencils; two grids give a Richardson-extrapolated value.
    """
    inner = _decimate_closed(np.asarray(inner, dtype=complex))
    outer = _decimate_closed(np.asarray(outer, dtype=complex))
    if not np.all(points_in_polygon(inner, outer)):
        raise NonNested("inner polyline must lie inside the outer one")
    m_fine = _modulus_once(inner, outer, n)
    m_coarse = _modulus_once(inner, outer, (n + 1) // 2)
    return (4.0 * m_fine - m_coarse) / 3.0


# -- cap sewing -------------------------------------------------------------

def _flip_if_needed(x: RiggedSurface):
    """Mobius-normalize so nontrivial cap fields have compact support.

    Returns (surface, flip) where flip is the Mobius applied (or None).
    An exterior removed disk with a non-identity rigging would carry its
    cap correction field to infinity, so the configuration is inverted
    through an interior pole first.  Identity-rigged exterior caps are
    conformal (zero field, marked point at infinity) and need no flip.
    """
    from .circlemaps import sup_distance
    ext = [k for k, d in enumerate(x.disks) if d.exterior
           and sup_distance(x.riggings[k],
                            identity_circle_map(x.riggings[k].m)) > 1e-13]
    if not ext:
        return x, None
    k0 = ext[0]
    de = x.disks[k0]
    finite = [d for k, d in enumerate(x.disks) if k != k0]

    def clearance(p):
        c = de.radius - abs(p - de.center)
        for d in finite:
            c = min(c, abs(p - d.center) - d.radius)
        return c

    # pole of the flip must sit in the surface interior, away from every
    # boundary, or removed disks would flip to exterior regions
    candidates = [de.center]
    for rho in (0.25, 0.45, 0.65, 0.8):
        for ang in np.linspace(0, TWO_PI, 16, endpoint=False):
            candidates.append(de.center
                              + rho * de.radius * np.exp(1j * ang))
    pole = max(candidates, key=clearance)
    if clearance(pole) <= 0:
        raise ValueError("no interior pole found for the flip")
    flip = Mobius(0, de.radius, 1, -pole)
    disks, riggings = [], []
    for k, d in enumerate(x.disks):
        nd = mobius_circle_image(flip, d)
        conj_map = x.disks[k].surface_to_unit().compose(
            flip.inverse()).compose(nd.surface_to_unit().inverse())
        lift = np.unwrap(np.angle(conj_map.apply(
            np.exp(1j * np.linspace(0, TWO_PI, x.riggings[k].m)))))
        if lift[-1] < lift[0]:
            raise ValueError("orientation flip in rigging transport")
        riggings.append(compose(x.riggings[k], CircleMap(lift)))
        disks.append(nd)
    marking = None
    if x.marking is not None and x.marking.sup > 0:
        g = x.marking.grid
        mask = np.abs(x.marking.values) > 0
        z = g.mesh()[mask]
        img = flip.apply(z)
        der = flip.derivative(z)
        marking = _scatter_field(g, img,
                                 x.marking.values[mask] * der / np.conj(der))
    return RiggedSurface(disks, riggings, x.orientations, marking), flip


@dataclass
class PuncturedSurface:
    marked_points: np.ndarray
    local_coords: list
    provenance: str
    uniformizer: PlaneMap | None = None
    flip: Mobius | None = None


def cap_fields(x: RiggedSurface, grid: GridSpec):
    """Per-boundary cap correction fields and cap centers (finite disks).

    The cap across boundary k is encoded by kappa_k = E_k o W_k with W_k
    the removed-side Mobius normalization and E_k the disk extension of
    the reflected rigging; its dilatation, supported in the removed disk,
    is the correction field.  Identity riggings give conformal kappa and a
    zero field.
    """
    from .circlemaps import sup_distance
    z = grid.mesh()
    fields = np.zeros((grid.n, grid.n), dtype=complex)
    centers = []
    for k, d in enumerate(x.disks):
        w_map = d.removed_to_unit()
        rig = x.riggings[k]
        if sup_distance(rig, identity_circle_map(rig.m)) < 1e-13:
            centers.append(np.inf + 0j if d.exterior else d.center)
            continue
        if d.exterior:
            raise ValueError("nontrivial cap on an exterior disk needs "
                             "the flipped configuration")
        ext = _DiskExtension(reflect(rig))
        sel = d.removed_contains(z, margin=-0.5 * grid.cell)
        pts = z[sel]
        u = w_map.apply(pts)
        mu_e = ext.mu_at(u, min(grid.cell / d.radius, 0.05))
        der = w_map.derivative(pts)
        fields[sel] = mu_e * np.conj(der) / der
        q = ext.inverse(np.array([0j]), seeds=np.array([0.1 + 0j]))[0]
        centers.append(w_map.inverse().apply(q))
    return fields, np.asarray(centers, dtype=complex)


def sew_caps(x: RiggedSurface, grid: GridSpec,
             solver_tol: float = 1e-9) -> PuncturedSurface:
    """Cap every boundary with an identity-rigged disk piece.

    All caps are filled in one uniformizing solve: the glued field is the
    marking plus the per-disk cap corrections (disjoint supports), and the
    marked points are the images of the cap centers.
    """
    flat, flip = _flip_if_needed(x)
    fields, centers = cap_fields(flat, grid)
    if flat.marking is not None:
        fields = fields + flat.marking.values
    r = np.abs(grid.mesh())
    nz = np.abs(fields) > 0
    support = float(np.max(r[nz])) + grid.cell if np.any(nz) else grid.cell
    total = BeltramiField(grid, fields, min(support, grid.half_width / 2))
    w = solve_beltrami(total, tol=solver_tol)
    finite = np.isfinite(centers)
    marked = np.where(finite, 0j, np.inf + 0j).astype(complex)
    marked[finite] = w.at(centers[finite])
    local = _local_coordinates(flat, w, centers, marked)
    return PuncturedSurface(marked_points=np.asarray(marked, dtype=complex),
                            local_coords=local,
                            provenance=f"caps-{len(flat.disks)}b-n{grid.n}",
                            uniformizer=w, flip=flip)


def _local_coordinates(flat: RiggedSurface, w: PlaneMap, centers, marked,
                       n: int = 64):
    """Small chart grids kappa o w^{-1} around each marked point.

    A marked point at infinity (identity-rigged exterior cap) gets None;
    its chart is the inversion J in the sphere coordinate.
    """
    coords = []
    for k, d in enumerate(flat.disks):
        if not np.isfinite(marked[k]):
            coords.append(None)
            continue
        half = 0.4 * d.radius
        sub = GridSpec(half, n)
        zz = sub.mesh() + marked[k]
        back = w.invert_at(zz, seeds=zz)
        w_map = d.removed_to_unit()
        rig = flat.riggings[k]
        from .circlemaps import sup_distance
        if sup_distance(rig, identity_circle_map(rig.m)) < 1e-13:
            vals = w_map.apply(back)
        else:
            ext = _DiskExtension(reflect(rig))
            u = w_map.apply(back)
            u = np.where(np.abs(u) < 1, u, u / np.abs(u) * (1 - 1e-12))
            vals = ext.eval(u)
        pm = PlaneMap(sub, vals)
        pm.base_point = marked[k]
        coords.append(pm)
    return coords


def capped_invariants(x: RiggedSurface, grid: GridSpec,
                      extra_field: BeltramiField | None = None) -> np.ndarray:
    """Marked-point invariants of the capped surface.

    extra_field, if given, is added to the marking before capping (same
    grid).  Fewer than four marked points yield an empty vector.
    """
    if extra_field is not None:
        base = x.marking.values if x.marking is not None else 0.0
        vals = base + extra_field.values
        sup_r = grid.half_width / 2
        x = x.with_marking(BeltramiField(grid, vals, sup_r))
    ps = sew_caps(x, grid)
    return puncture_invariants(ps)


def puncture_invariants(ps: PuncturedSurface,
                        marking: BeltramiField | None = None) -> np.ndarray:
    pts = np.asarray(ps.marked_points, dtype=complex)
    if marking is not None and marking.sup > 0:
        w = solve_beltrami(marking)
        fin = np.isfinite(pts)
        pts = pts.copy()
        pts[fin] = w.at(pts[fin])
    if pts.size < 4:
        return np.empty(0, dtype=complex)
    t = Mobius.to_zero_one_inf(pts[0], pts[1], pts[2])
    return np.asarray(t.apply(pts[3:]), dtype=complex)


def invariants(surface, marking: BeltramiField | None = None) -> np.ndarray:
    """Invariant vector of a sewn or punctured surface realization."""
    if isinstance(surface, PuncturedSurface):
        return puncture_invariants(surface, marking)
    if isinstance(surface, SewnSurface):
        return sewn_invariants(surface, marking)
    raise TypeError("need a SewnSurface or PuncturedSurface")


# -- two-stage capping (sequential pipeline, used as a cross-check) ---------

def sew_caps_two_stage(x: RiggedSurface, grid: GridSpec, first):
    """Cap a subset of boundaries, then the rest through the stage-1 map.

    Equivalent to sew_caps up to discretization; exercises the transport
    of correction fields through an already-solved deformation, which is
    the sequential route through the sewing diagram.
    """
    flat, _ = _flip_if_needed(x)
    first = set(first)
    rest = [k for k in range(len(flat.disks)) if k not in first]

    sub1 = RiggedSurface([flat.disks[k] for k in sorted(first)],
                         [flat.riggings[k] for k in sorted(first)],
                         [flat.orientations[k] for k in sorted(first)],
                         flat.marking)
    f1, c1 = cap_fields(sub1, grid)
    if flat.marking is not None:
        f1 = f1 + flat.marking.values
    r = np.abs(grid.mesh())
    nz = np.abs(f1) > 0
    sup1 = float(np.max(r[nz])) + grid.cell if np.any(nz) else grid.cell
    w1 = solve_beltrami(BeltramiField(grid, f1,
                                      min(sup1, grid.half_width / 2)))

    # stage 2: pull grid nodes back through w1 (conformal on these disks)
    # and sample the cap fields at the preimages, so jumps stay sharp
    from .circlemaps import sup_distance
    zmesh = grid.mesh()
    vals2 = np.zeros_like(zmesh)
    c2 = []
    for k in rest:
        d = flat.disks[k]
        rig = flat.riggings[k]
        if sup_distance(rig, identity_circle_map(rig.m)) < 1e-13:
            c2.append(np.inf + 0j if d.exterior else d.center)
            continue
        if d.exterior:
            raise ValueError("nontrivial cap on an exterior disk needs "
                             "the flipped configuration")
        rim = w1.at(d.boundary(np.linspace(0, TWO_PI, 128)))
        pad = 3 * grid.cell
        box = ((zmesh.real > rim.real.min() - pad)
               & (zmesh.real < rim.real.max() + pad)
               & (zmesh.imag > rim.imag.min() - pad)
               & (zmesh.imag < rim.imag.max() + pad))
        pp = zmesh[box]
        zz = w1.invert_at(pp, seeds=pp)
        inside = np.abs(zz - d.center) <= d.radius - 0.5 * grid.cell
        if not np.any(inside):
            c2.append(d.center)
            continue
        zz = zz[inside]
        w_map = d.removed_to_unit()
        ext = _DiskExtension(reflect(rig))
        mu_e = ext.mu_at(w_map.apply(zz), min(grid.cell / d.radius, 0.05))
        der = w_map.derivative(zz)
        w1z, _ = w1.wirtinger_at(zz)
        sel = np.zeros(zmesh.shape, dtype=bool)
        sel[box] = inside
        vals2[sel] = mu_e * (np.conj(der) / der) * (w1z / np.conj(w1z))
        q = ext.inverse(np.array([0j]), seeds=np.array([0.1 + 0j]))[0]
        c2.append(w_map.inverse().apply(q))
    r = np.abs(zmesh)
    nz = np.abs(vals2) > 0
    sup2 = float(np.max(r[nz])) + grid.cell if np.any(nz) else grid.cell
    field2 = BeltramiField(grid, vals2, min(sup2, grid.half_width / 2))
    c2 = np.asarray(c2, dtype=complex)
    w2 = solve_beltrami(field2)

    def push(points):
        out = np.array(points, dtype=complex)
        fin = np.isfinite(out)
        out[fin] = w2.at(w1.at(out[fin]))
        return out

    marked = np.empty(len(flat.disks), dtype=complex)
    stage1_pts = push(c1) if len(c1) else np.empty(0, complex)
    stage2_pts = push(c2) if len(c2) else np.empty(0, complex)
    for pos, k in enumerate(sorted(first)):
        marked[k] = stage1_pts[pos]
    for pos, k in enumerate(rest):
        marked[k] = stage2_pts[pos]
    return marked


# -- Teichmueller-level sewing and the commuting diagram --------------------

def sew_deformed(x: RiggedSurface, mu: BeltramiField | None, i: int,
                 y: RiggedSurface, nu: BeltramiField | None, j: int,
                 grid: GridSpec, tol: float = 1e-3):
    """Sew marked surfaces: glue the transported markings and solve.

    Returns (sewn, glued field, deformation map, invariants) - the
    glue-then-solve evaluation order.
    """
    sewn = sew(x.with_marking(mu), i, y.with_marking(nu), j, grid, tol)
    glued = sewn.glued_field or BeltramiField.zero(grid)
    w = solve_beltrami(glued) if glued.sup > 0 else None
    polylines = [b.polyline for b in sewn.boundaries]
    if w is not None:
        polylines = [w.at(p) for p in polylines]
    if len(polylines) == 2:
        inner, outer = orient_annulus(polylines[0], polylines[1])
        inv = np.array([modulus(inner, outer)], dtype=complex)
    else:
        inv = sewn_invariants(sewn, glued if glued.sup > 0 else None)
    return sewn, glued, w, inv


def sew_t(x: RiggedSurface, mu: BeltramiField | None, i: int,
          y: RiggedSurface, nu: BeltramiField | None, j: int,
          grid: GridSpec, tol: float = 1e-3) -> np.ndarray:
    """Invariants of the sewn marked pair (glue-then-solve order)."""
    return sew_deformed(x, mu, i, y, nu, j, grid, tol)[3]


def sew_t_two_orders(x: RiggedSurface, mu: BeltramiField | None, i: int,
                     y: RiggedSurface, nu: BeltramiField | None, j: int,
                     grid: GridSpec, tol: float = 1e-3):
    """Both evaluation orders of the sewing diagram.

    Order 1 glues the transported markings and solves once.  Order 2
    solves the x-side marking first, transports the y-side marking
    through the stage-1 map, solves again, and composes.  The two must
    agree within discretization error.
    """
    sewn, glued, w_a, inv_a = sew_deformed(x, mu, i, y, nu, j, grid, tol)

    # order 2: x-side field alone, then the y-side field through stage 1
    only_x = sew(x.with_marking(mu), i, y.with_marking(None), j, grid, tol)
    f1 = only_x.glued_field or BeltramiField.zero(grid)
    w1 = solve_beltrami(f1) if f1.sup > 0 else None

    if nu is not None and nu.sup > 0:
        mask = np.abs(nu.values) > 0
        z = nu.grid.mesh()[mask]
        img = sewn.realize("y", z)
        der = sewn.chart_derivative("y", z)
        vals = nu.values[mask] * der / np.conj(der)
        if w1 is not None:
            fz, fzb = w1.wirtinger_at(img)
            mu1 = fzb / fz
            num = (vals - mu1) / (1.0 - np.conj(mu1) * vals)
            vals = num * (fz / np.abs(fz)) ** 2
            img = w1.at(img)
        field2 = _scatter_field(grid, img, vals, seam=sewn.seam)
        w2 = solve_beltrami(field2)
    else:
        w2 = None

    polylines = [b.polyline for b in sewn.boundaries]
    if w1 is not None:
        polylines = [w1.at(p) for p in polylines]
    if w2 is not None:
        polylines = [w2.at(p) for p in polylines]
    if len(polylines) == 2:
        inner, outer = orient_annulus(polylines[0], polylines[1])
        inv_b = np.array([modulus(inner, outer)], dtype=complex)
    else:
        out = []
        for p in polylines:
            c, r, _ = best_fit_circle(p)
            out.extend([c, complex(r)])
        inv_b = np.asarray(out, dtype=complex)
    return inv_a, inv_b


# -- boundary Dehn twist ----------------------------------------------------

def dehn_twist_boundary(x: RiggedSurface, i: int, collar_width: float,
                        grid: GridSpec | None = None) -> RiggedSurface:
    """Replace the marking by its composition with a full collar twist.

    The twist rotates by 2*pi across a collar of multiplicative width
    (1 + collar_width) on the surface side of boundary i, ramping
    linearly in log-radius (the extremal profile); both collar edges
    restrict to the identity, and the riggings are untouched.
    """
    if collar_width <= 0:
        raise ValueError("collar_width must be positive")
    d = x.disks[i]
    if d.exterior:
        # surface inside the circle; collar reaches inward
        rho0, rho1 = d.radius / (1.0 + collar_width), d.radius
    else:
        rho0, rho1 = d.radius, d.radius * (1.0 + collar_width)
    for k, other in enumerate(x.disks):
        if k == i:
            continue
        sep = abs(d.center - other.center)
        if other.exterior:
            # collar must stay inside the other circle
            if sep + rho1 >= other.radius:
                raise CollarTooWide(f"collar hits boundary {k}")
        elif d.exterior:
            # other disk must stay inside the collar's inner hole
            if sep + other.radius >= rho0:
                raise CollarTooWide(f"collar hits boundary {k}")
        else:
            if sep - other.radius <= rho1:
                raise CollarTooWide(f"collar hits boundary {k}")

    if grid is None:
        if x.marking is None:
            raise ValueError("need a grid when the surface has no marking")
        grid = x.marking.grid
    if abs(d.center) + rho1 > grid.half_width / 2.0 + 1e-12:
        raise ValueError(
            f"twist collar reaches {abs(d.center) + rho1:.3f}, beyond the "
            f"solver support budget half_width/2 = {grid.half_width / 2:.3f}")

    z = grid.mesh()
    zeta = z - d.center
    rho = np.abs(zeta)
    log_ratio = np.log(rho1 / rho0)
    xconst = TWO_PI / log_ratio
    in_collar = (rho > rho0) & (rho < rho1)
    mu_t = np.zeros_like(z)
    phase = np.ones_like(z)
    t_img = z.copy()
    if np.any(in_collar):
        zc = zeta[in_collar]
        rc = rho[in_collar]
        s = np.log(rc / rho0) / log_ratio
        ang = TWO_PI * s
        unit2 = (zc / rc) ** 2
        mu_t[in_collar] = (1j * xconst / (2.0 + 1j * xconst)) * unit2
        t_img[in_collar] = d.center + zc * np.exp(1j * ang)
        tz = np.exp(1j * ang) * (1.0 + 0.5j * xconst)
        phase[in_collar] = np.conj(tz) / tz

    if x.marking is not None and x.marking.sup > 0:
        ax = x.marking.grid.axis()
        interp = RegularGridInterpolator(
            (ax, ax), x.marking.values, bounds_error=False, fill_value=0.0)
        mu_at_t = interp(np.column_stack([t_img.imag.ravel(),
                                          t_img.real.ravel()])
                         ).reshape(z.shape)
        t = mu_at_t * phase
        new_vals = (mu_t + t) / (1.0 + np.conj(mu_t) * t)
    else:
        new_vals = mu_t
    r = np.abs(z)
    nz = np.abs(new_vals) > 0
    support = float(np.max(r[nz])) + grid.cell if np.any(nz) else grid.cell
    field = BeltramiField(grid, new_vals, min(support, grid.half_width / 2))
    return x.with_marking(field)


def twist_field(center: complex, rho0: float, rho1: float,
                grid: GridSpec, turns: float = 1.0) -> BeltramiField:
    """Dilatation field of a log-linear twist by `turns` full rotations."""
    if abs(center) + rho1 > grid.half_width / 2.0 + 1e-12:
        raise ValueError("twist annulus exceeds the solver support budget")
    z = grid.mesh()
    zeta = z - center
    rho = np.abs(zeta)
    xconst = turns * TWO_PI / np.log(rho1 / rho0)
    vals = np.zeros_like(z)
    sel = (rho > rho0) & (rho < rho1)
    vals[sel] = (1j * xconst / (2.0 + 1j * xconst)) * (zeta[sel]
                                                       / rho[sel]) ** 2
    return BeltramiField(grid, vals,
                         min(abs(center) + rho1 + grid.cell,
                             grid.half_width / 2))
