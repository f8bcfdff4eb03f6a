"""Holomorphic motions: embed a quasiconformal plane map into a
one-complex-parameter family, affine families of rigging lifts, and
families of surfaces cut out by moving disks with explicit comparison
maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beltrami import dilatation, solve_beltrami
from .circlemaps import CircleMap
from .errors import (BudgetExceeded, CutoutEscapes, DegenerateAffine,
                     MonotonicityLost)
from .grids import BeltramiField, GridSpec, PlaneMap

TWO_PI = 2 * np.pi


@dataclass
class MotionFamily:
    """Family u^t = rho^t o w^{(t/ell) mu} with u^0 = id, u^ell = u.

    sigma(z) = a z + b is the affine map making sigma o u fix 0 and 1;
    rho^t(z) = ((ell - t) z + t sigma^{-1}(z)) / ell undoes it along the
    way, so that each u^t is holomorphic in t pointwise.
    """

    sigma_a: complex
    sigma_b: complex
    ell: float
    k: float
    base_field: BeltramiField
    radius: float

    @property
    def t_star(self) -> float:
        return self.ell

    def affine_coeffs(self, t: complex):
        # rho^t(z) = A(t) z + B(t)
        a, b = self.sigma_a, self.sigma_b
        big_a = ((self.ell - t) + t / a) / self.ell
        big_b = -t * b / (a * self.ell)
        return big_a, big_b

    def sample(self, t: complex, tol: float = 1e-9) -> PlaneMap:
        if abs(t) >= 1.0:
            raise ValueError("motion parameter must satisfy |t| < 1")
        big_a, big_b = self.affine_coeffs(t)
        if abs(big_a) < 1e-12:
            raise DegenerateAffine(f"rho^t degenerates at t = {t}")
        w = solve_beltrami(self.base_field.scaled(t / self.ell), tol=tol)
        return PlaneMap(w.grid, big_a * w.values + big_b)

    def field_sup(self, t: complex) -> float:
        return abs(t) * self.k / self.ell

    def default_stencil(self, scale: float = 1.0):
        """t samples on concentric rings: radii {0.3, 0.6} x 8 angles."""
        ts = [0j]
        for rho in (0.3, 0.6):
            for ang in np.linspace(0, TWO_PI, 8, endpoint=False):
                ts.append(rho * self.radius * scale * np.exp(1j * ang))
        return np.asarray(ts)


def embed_in_motion(u: PlaneMap) -> MotionFamily:
    """Embed a normalized quasiconformal map into a holomorphic motion.

    Chooses ell = (k+1)/2 for k = sup|mu(u)| (requiring k < 0.9), scales
    the dilatation linearly in t, and conjugates by the affine
    normalization, so u^0 = id and u^ell recovers u.
    """
    mu = dilatation(u)
    k = mu.sup
    if k >= 0.9:
        raise BudgetExceeded(f"sup|mu(u)| = {k:.3f} >= 0.9")
    ell = (k + 1.0) / 2.0
    u0 = complex(u.at(0j))
    u1 = complex(u.at(1 + 0j))
    if abs(u1 - u0) < 1e-14:
        raise DegenerateAffine("u(1) too close to u(0)")
    a = 1.0 / (u1 - u0)
    b = -u0 * a
    # rho^t degenerates where (ell - t) + t/a = 0
    radius = 1.0
    if abs(1.0 - 1.0 / a) > 1e-14:
        t_bad = ell / (1.0 - 1.0 / a)
        radius = min(1.0, 0.9 * abs(t_bad))
    return MotionFamily(sigma_a=a, sigma_b=b, ell=ell, k=k,
                        base_field=mu, radius=radius)


@dataclass
class RiggingFamily:
    """Lift family g_t = g0 + Re(t * eta), affine in (Re t, Im t).

    eta(theta) = sum_m c_m e^{i m theta} from the direction descriptor;
    each coefficient enters the lift through the holomorphic product
    t * eta before the real part is taken.
    """

    base: CircleMap
    direction: dict
    radius: float

    def _eta(self, theta):
        out = np.zeros_like(theta, dtype=complex)
        for m, c in self.direction.items():
            out += c * np.exp(1j * int(m) * theta)
        return out

    def lift_at(self, t: complex, theta):
        return self.base.lift(theta) + np.real(t * self._eta(theta))

    def sample(self, t: complex) -> CircleMap:
        if abs(t) > self.radius + 1e-12:
            raise ValueError("parameter outside the family radius")
        th = np.linspace(0.0, TWO_PI, self.base.m)
        lift = self.base.lift(th) + np.real(t * self._eta(th))
        # endpoints carry the same perturbation, so the span stays 2*pi
        return CircleMap(lift)


def rigging_family(base: CircleMap, direction: dict,
                   radius: float) -> RiggingFamily:
    """Validated affine family of circle-map lifts.

    Raises MonotonicityLost when some t on the closed parameter disk
    breaks strict monotonicity of the lift.
    """
    fam = RiggingFamily(base=base, direction=direction, radius=radius)
    th = np.linspace(0.0, TWO_PI, 4 * base.m)
    g0 = base.lift(th)
    eta = fam._eta(th)
    for ang in np.linspace(0, TWO_PI, 32, endpoint=False):
        t = radius * np.exp(1j * ang)
        lift = g0 + np.real(t * eta)
        if np.any(np.diff(lift) <= 0):
            raise MonotonicityLost(
                f"lift not increasing at t = {t:.3f}")
    return fam


@dataclass
class CutoutFamily:
    """Round disk moving with velocity c: D_t = B(q0 + t c, r0).

    The cut-out carries the identity rigging in its own normalized chart
    (a round circle admits only rigid holomorphic families), and the
    surrounding comparison annulus reaches out to outer_factor * r0.
    """

    center0: complex
    radius0: float
    velocity: complex
    t_radius: float
    outer_factor: float = 3.0

    def center(self, t: complex) -> complex:
        return self.center0 + t * self.velocity

    def validate(self):
        reach = self.t_radius * abs(self.velocity)
        if reach + self.radius0 >= self.outer_factor * self.radius0:
            raise CutoutEscapes(
                "cut-out leaves the reference annulus: "
                f"|t c| + r0 = {reach + self.radius0:.3f} >= "
                f"{self.outer_factor * self.radius0:.3f}")


@dataclass
class CutoutMotion:
    fam: CutoutFamily
    grid: GridSpec

    def comparison_values(self, t: complex, z) -> np.ndarray:
        """F_t: identity off the annulus, interpolated displacement on it.

        F_t(z) = z + (1 - s(|z - q0|)) * t * c with s the log-radial ramp
        from the moving circle to the outer reference circle; equals the
        boundary displacement on the cut-out circle and the identity
        outside, and is affine (hence holomorphic) in t pointwise.
        """
        f = self.fam
        z = np.asarray(z, dtype=complex)
        rel = z - f.center0
        rho = np.abs(rel)
        r0, r1 = f.radius0, f.outer_factor * f.radius0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.clip(np.log(np.where(rho > 0, rho, r0) / r0)
                        / np.log(r1 / r0), 0.0, 1.0)
        return z + (1.0 - s) * t * f.velocity

    def comparison_map(self, t: complex) -> PlaneMap:
        return PlaneMap(self.grid, self.comparison_values(t,
                                                          self.grid.mesh()))

    def comparison_dilatation(self, t: complex) -> BeltramiField:
        return dilatation(self.comparison_map(t))


def family_of_cutouts(fam: CutoutFamily, grid: GridSpec) -> CutoutMotion:
    """Comparison-map family for a moving cut-out disk."""
    fam.validate()
    return CutoutMotion(fam=fam, grid=grid)
