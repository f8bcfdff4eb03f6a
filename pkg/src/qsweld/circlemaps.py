"""Orientation-preserving circle homeomorphisms stored as lifts, their
algebra, quasisymmetry estimation, and quasiconformal extensions.

A circle map h is stored through a lift g: [0, 2*pi] -> R sampled at M
uniform angles including both endpoints, with g(2*pi) = g(0) + 2*pi.  The
induced map is h(e^{i theta}) = e^{i g(theta)}.  Evaluation anywhere uses
monotone (shape-preserving) cubic interpolation of the lift, so strict
monotonicity survives interpolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (DegenerateRatio, ExtensionDegenerate, NonMonotone,
                     RadiiOrder, WrongDegree)
from .grids import GridSpec, PlaneMap

TWO_PI = 2.0 * np.pi


class CircleMap:
    """Degree-one circle homeomorphism represented by a sampled lift."""

    def __init__(self, lift_samples):
        g = np.asarray(lift_samples, dtype=float)
        if g.ndim != 1 or g.size < 16:
            raise NonMonotone("need a 1-d lift with at least 16 samples")
        if np.any(np.diff(g) <= 0):
            raise NonMonotone("lift samples must be strictly increasing")
        span = g[-1] - g[0]
        if abs(span - TWO_PI) > 1e-12:
            raise WrongDegree(f"lift spans {span:.15g}, expected 2*pi")
        # Renormalize the span to exactly 2*pi with a linear ramp.
        m = g.size
        g = g + (TWO_PI - span) * np.arange(m) / (m - 1)
        self.lift_samples = g
        self.degree = 1
        self._angles = np.linspace(0.0, TWO_PI, m)
        self._fwd = None
        self._inv = None

    # -- basic accessors --------------------------------------------------

    @property
    def m(self) -> int:
        return self.lift_samples.size

    @property
    def basepoint_value(self) -> float:
        return float(self.lift_samples[0])

    def _fwd_interp(self):
        if self._fwd is None:
            self._fwd = PchipInterpolator(self._angles, self.lift_samples)
        return self._fwd

    def _inv_interp(self):
        if self._inv is None:
            self._inv = PchipInterpolator(self.lift_samples, self._angles)
        return self._inv

    def lift(self, theta):
        """Lift value at any angle, using g(t + 2*pi) = g(t) + 2*pi."""
        theta = np.asarray(theta, dtype=float)
        k = np.floor(theta / TWO_PI)
        t = theta - TWO_PI * k
        return self._fwd_interp()(t) + TWO_PI * k

    def lift_inverse(self, y):
        y = np.asarray(y, dtype=float)
        g0 = self.lift_samples[0]
        k = np.floor((y - g0) / TWO_PI)
        t = y - TWO_PI * k
        return self._inv_interp()(t) + TWO_PI * k

    def apply(self, z):
        """Map points of the unit circle (complex) through h."""
        z = np.asarray(z, dtype=complex)
        theta = np.mod(np.angle(z), TWO_PI)
        return np.exp(1j * self.lift(theta))

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        lift = [f"{v:.17g}" for v in self.lift_samples]
        doc = {"m": self.m, "lift": [float(v) for v in lift],
               "g2pi": float(f"{self.lift_samples[0] + TWO_PI:.17g}")}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "CircleMap":
        doc = json.loads(text)
        g = np.asarray(doc["lift"], dtype=float)
        if doc.get("m") != g.size:
            raise WrongDegree("sample count disagrees with 'm'")
        if abs(doc["g2pi"] - (g[0] + TWO_PI)) > 1e-9:
            raise WrongDegree("'g2pi' disagrees with the basepoint value")
        return make_circle_map(g)


def make_circle_map(lift_samples) -> CircleMap:
    """Validate lift samples and build a CircleMap."""
    return CircleMap(lift_samples)


def identity_circle_map(m: int = 256) -> CircleMap:
    return CircleMap(np.linspace(0.0, TWO_PI, m))


def rotation_map(alpha: float, m: int = 256) -> CircleMap:
    return CircleMap(np.linspace(0.0, TWO_PI, m) + alpha)


def sine_perturbation(amplitude: float, m: int = 256,
                      mode: int = 1) -> CircleMap:
    """Lift theta + a*sin(k theta); valid while |a*k| < 1."""
    th = np.linspace(0.0, TWO_PI, m)
    return CircleMap(th + amplitude * np.sin(mode * th))


def compose(a: CircleMap, b: CircleMap) -> CircleMap:
    """(a o b) as a CircleMap, resampled at max(M_a, M_b) angles."""
    m = max(a.m, b.m)
    th = np.linspace(0.0, TWO_PI, m)
    return CircleMap(a.lift(b.lift(th)))


def invert(a: CircleMap) -> CircleMap:
    th = np.linspace(0.0, TWO_PI, a.m)
    return CircleMap(a.lift_inverse(th))


def reflect(a: CircleMap) -> CircleMap:
    """The conjugated map J o a o J, lift theta -> -g(-theta)."""
    return CircleMap(-a.lift_samples[::-1])


def sup_distance(a: CircleMap, b: CircleMap, samples: int = 4096) -> float:
    """Sup of the circle distance between a and b over dense angles."""
    th = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    d = a.lift(th) - b.lift(th)
    d = np.mod(d + np.pi, TWO_PI) - np.pi
    return float(np.max(np.abs(d)))


# -- quasisymmetry estimation ---------------------------------------------

@dataclass(frozen=True)
class QsReport:
    k_estimate: float
    worst_pair: tuple
    cayley_used: bool


def _ratio_sup(H, xs, ts):
    """Sup of max(M, 1/M) for M(x,t) = (H(x+t)-H(x)) / (H(x)-H(x-t))."""
    x = xs[:, None]
    t = ts[None, :]
    num = H(x + t) - H(x)
    den = H(x) - H(x - t)
    if np.min(np.abs(den)) < 1e-14 or np.min(np.abs(num)) < 1e-14:
        raise DegenerateRatio("quasisymmetry ratio denominator below 1e-14")
    ratio = num / den
    both = np.maximum(ratio, 1.0 / ratio)
    flat = int(np.argmax(both))
    i, j = np.unravel_index(flat, both.shape)
    return float(both[i, j]), (float(xs[i]), float(ts[j]))


def _cayley_line_map(h: CircleMap):
    """Line map conjugate to the basepoint-rotated h.

    The circle is carried to the extended line by z -> i(1+z)/(1-z); on
    angles this reads x = tan((theta - pi)/2), and the conjugated line map
    is H(x) = -cot(gr(pi + 2 atan x)/2) where gr = g - g(0).
    """
    g0 = h.basepoint_value

    def H(x):
        theta = np.pi + 2.0 * np.arctan(x)
        u = h.lift(theta) - g0
        return -1.0 / np.tan(u / 2.0)

    return H


def qs_constant(h: CircleMap, grid_density: int = 256) -> QsReport:
    """Sampled quasisymmetry constant of a circle map.

    The map is rotated so it fixes 1, moved to the line by the Cayley
    transform, and the symmetric-ratio sup is taken over a nested sample
    grid: x from uniform angles, t log-spaced over [2*pi/M, pi].  The
    estimate is a lower bound of the true constant and is nondecreasing
    in grid_density (grids are nested).
    """
    if grid_density < 64:
        raise ValueError("grid_density must be at least 64")
    H = _cayley_line_map(h)
    theta = TWO_PI * np.arange(1, grid_density) / grid_density
    xs = np.tan((theta - np.pi) / 2.0)
    kt = grid_density // 4 + 1
    ts = np.exp(np.linspace(np.log(TWO_PI / h.m), np.log(np.pi), kt))
    k, pair = _ratio_sup(H, xs, ts)
    return QsReport(k_estimate=max(k, 1.0), worst_pair=pair, cayley_used=True)


def qs_constant_line(H, grid_density: int = 256, decades: float = 4.0
                     ) -> QsReport:
    """Quasisymmetry constant of an increasing line map given as a callable.

    Synthetic entry point for line maps such as x -> 2x or x -> x^3;
    samples x on a symmetric log grid (plus 0) and t log-spaced.
    """
    if grid_density < 64:
        raise ValueError("grid_density must be at least 64")
    mag = np.exp(np.linspace(-decades * np.log(10.0),
                             decades * np.log(10.0), grid_density))
    xs = np.concatenate([-mag[::-1], [0.0], mag])
    kt = grid_density // 4 + 1
    ts = np.exp(np.linspace(-decades * np.log(10.0),
                            np.log(10.0), kt))
    k, pair = _ratio_sup(H, xs, ts)
    return QsReport(k_estimate=max(k, 1.0), worst_pair=pair,
                    cayley_used=False)


# -- Beurling-Ahlfors style disk extension ---------------------------------

# Composite Gauss-Legendre rule on [0, 1] with log-graded panels, so the
# average integrals stay accurate when the Cayley transform sends points
# near z = 1 to huge half-plane heights.
_PANELS = (0.0, 1e-4, 1e-2, 1e-1, 1.0)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _composite_rule():
    nodes, weights = [], []
    for a, b in zip(_PANELS[:-1], _PANELS[1:]):
        nodes.append(a + (b - a) * (_GL_NODES + 1.0) / 2.0)
        weights.append((b - a) * _GL_WEIGHTS / 2.0)
    return np.concatenate(nodes), np.concatenate(weights)


_REL_NODES, _REL_WEIGHTS = _composite_rule()


class _DiskExtension:
    """Quasiconformal extension of a circle map to the closed disk.

    The half-plane extension by interval averages of the conjugated line
    map is transported through the Cayley transform; outside the disk the
    map is continued by reflection, giving a plane homeomorphism.
    """

    def __init__(self, h: CircleMap):
        self.h = h
        self.rot = np.exp(1j * h.basepoint_value)
        self._H = _cayley_line_map(h)

    def _halfplane(self, w):
        # Interval averages alpha (right) and beta (left); the imaginary
        # part uses their full difference so affine boundary maps extend
        # to complex-affine maps (identity -> identity, rotations exact).
        x, y = w.real, w.imag
        tn = y[..., None] * _REL_NODES
        alpha = np.sum(_REL_WEIGHTS * self._H(x[..., None] + tn), axis=-1)
        beta = np.sum(_REL_WEIGHTS * self._H(x[..., None] - tn), axis=-1)
        return (alpha + beta) / 2.0 + 1j * (alpha - beta)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape, dtype=complex)
        r = np.abs(z)
        inside = r < 1.0 - 1e-12
        on = np.abs(r - 1.0) <= 1e-12
        outside = ~(inside | on)
        if np.any(inside):
            zi = z[inside]
            w = 1j * (1.0 + zi) / (1.0 - zi)
            phi = self._halfplane(w)
            out[inside] = self.rot * (phi - 1j) / (phi + 1j)
        if np.any(on):
            out[on] = self.h.apply(z[on])
        if np.any(outside):
            zr = 1.0 / np.conj(z[outside])
            w = 1j * (1.0 + zr) / (1.0 - zr)
            phi = self._halfplane(w)
            out[outside] = 1.0 / np.conj(self.rot * (phi - 1j) / (phi + 1j))
        return out

    def eval_grid(self, grid: GridSpec, chunk: int = 64) -> np.ndarray:
        z = grid.mesh()
        vals = np.empty_like(z)
        for i0 in range(0, grid.n, chunk):
            vals[i0:i0 + chunk] = self.eval(z[i0:i0 + chunk])
        return vals

    def mu_at(self, z, base_step: float):
        """Complex dilatation of the extension at interior points.

        Centered differences with a per-point step shrinking near the
        circle, so stencils never cross the boundary.
        """
        z = np.asarray(z, dtype=complex)
        step = np.minimum(base_step, (1.0 - np.abs(z)) / 3.0)
        step = np.maximum(step, 1e-7)
        ex = (self.eval(z + step) - self.eval(z - step)) / (2.0 * step)
        ey = (self.eval(z + 1j * step) - self.eval(z - 1j * step)) \
            / (2.0 * step)
        fz = (ex - 1j * ey) / 2.0
        fzb = (ex + 1j * ey) / 2.0
        jac = np.abs(fz) ** 2 - np.abs(fzb) ** 2
        if np.any(jac <= 0):
            raise ExtensionDegenerate(
                f"{int(np.sum(jac <= 0))} points with nonpositive Jacobian")
        return fzb / fz

    def inverse(self, targets, seeds=None, n_iter=40, tol=1e-13):
        """Newton inversion with finite-difference Wirtinger derivatives."""
        t = np.asarray(targets, dtype=complex)
        z = np.array(seeds if seeds is not None else t, dtype=complex)
        r = np.abs(z)
        z = np.where(r > 0.999, z / r * 0.999, z)
        for _ in range(n_iter):
            res = self.eval(z) - t
            if np.max(np.abs(res)) < tol:
                break
            step = np.maximum(np.minimum(1e-4, (1.0 - np.abs(z)) / 4.0), 1e-8)
            ex = (self.eval(z + step) - self.eval(z - step)) / (2.0 * step)
            ey = (self.eval(z + 1j * step) - self.eval(z - 1j * step)) \
                / (2.0 * step)
            fz = (ex - 1j * ey) / 2.0
            fzb = (ex + 1j * ey) / 2.0
            det = np.abs(fz) ** 2 - np.abs(fzb) ** 2
            det = np.where(np.abs(det) < 1e-30, 1e-30, det)
            z = z - (np.conj(fz) * res - fzb * np.conj(res)) / det
            r = np.abs(z)
            z = np.where(r > 1.0 - 1e-9, z / r * (1.0 - 1e-9), z)
        return z


def beurling_ahlfors_extend(h: CircleMap, grid: GridSpec) -> PlaneMap:
    """Quasiconformal extension of h to the closed unit disk on a grid.

    The returned PlaneMap agrees with h on the circle, is continued by
    reflection outside, and carries a `max_dilatation` attribute with the
    measured interior dilatation bound.
    """
    ext = _DiskExtension(h)
    values = ext.eval_grid(grid)
    pm = PlaneMap(grid, values)
    z = grid.mesh()
    band = 2.0 * grid.cell
    core = np.abs(z[1:-1, 1:-1]) < 1.0 - band
    far = np.abs(z[1:-1, 1:-1]) > 1.0 + band
    jac = pm.jacobian()
    if np.any(jac[core] <= 0) or np.any(jac[far] <= 0):
        raise ExtensionDegenerate("Jacobian sign flip on the grid")
    sample = z[np.abs(z) < 1.0 - band]
    if sample.size:
        mu = ext.mu_at(sample, grid.cell)
        sup = float(np.max(np.abs(mu)))
        pm.max_dilatation = (1.0 + sup) / (1.0 - sup)
    else:
        pm.max_dilatation = 1.0
    pm.extension = ext
    return pm


def annulus_interpolation_extend(inner: CircleMap, outer: CircleMap,
                                 r_inner: float, r_outer: float,
                                 grid: GridSpec | None = None) -> PlaneMap:
    """Log-radial angular interpolation between two boundary circle maps.

    W(r e^{i theta}) = r exp(i [g_in + s(r) (g_out - g_in)]) with
    s(r) = log(r/r_inner)/log(r_outer/r_inner), clamped outside the
    annulus so the map extends to a plane homeomorphism.
    """
    if not 0 < r_inner < r_outer:
        raise RadiiOrder(f"need 0 < r_inner < r_outer, "
                         f"got ({r_inner}, {r_outer})")
    if grid is None:
        grid = GridSpec(2.0 * r_outer, 512)

    log_ratio = np.log(r_outer / r_inner)

    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        theta = np.mod(np.angle(z), TWO_PI)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.clip(np.log(np.where(r > 0, r, 1.0) / r_inner)
                        / log_ratio, 0.0, 1.0)
        gi = inner.lift(theta)
        go = outer.lift(theta)
        out = r * np.exp(1j * (gi + s * (go - gi)))
        return np.where(r == 0, 0.0 + 0.0j, out)

    pm = PlaneMap(grid, evaluate(grid.mesh()))
    pm.evaluate = evaluate
    return pm
