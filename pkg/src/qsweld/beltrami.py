"""Normalized grid solver for the Beltrami equation w_zbar = mu * w_z on
the plane, with compactly supported mu, plus dilatation utilities.

Method: Neumann iteration phi <- mu + mu * S[phi] with the Beurling
transform S applied as the Fourier multiplier conj(xi)/xi (zero at xi=0),
then w = z + C[phi] with the Cauchy transform as the 1/((i/2) xi)
multiplier.  The iteration contracts in L^2 because the multiplier has
modulus one and sup|mu| < 1.  The grid periodizes both transforms, which
is why supports must stay inside half the window.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft as sfft

from .errors import BudgetExceeded, DegenerateJacobian, NoConvergence
from .grids import BeltramiField, GridSpec, PlaneMap, normalize_plane_map

SUP_BUDGET = 0.95


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("QSWELD_THREADS", "1")))
    except ValueError:
        return 1


def solve_beltrami(mu: BeltramiField, tol: float = 1e-9,
                   max_iter: int = 600) -> PlaneMap:
    """Normalized solution of the Beltrami equation for a gridded mu.

    Returns the map fixing 0 and 1 (affine renormalization; infinity is
    fixed because the correction decays).  Raises BudgetExceeded when
    sup|mu| > 0.95 and NoConvergence when the relative L^2 residual on
    the support stays above tol after max_iter sweeps.
    """
    if mu.sup > SUP_BUDGET:
        raise BudgetExceeded(f"sup|mu| = {mu.sup:.4f} exceeds 0.95")
    grid = mu.grid
    if mu.support_radius > grid.half_width / 2.0 + 1e-12:
        raise ValueError("support_radius must not exceed half_width/2")

    xi = grid.frequencies()
    with np.errstate(divide="ignore", invalid="ignore"):
        beurling = np.conj(xi) / xi
        cauchy = 1.0 / (0.5j * xi)
    beurling[0, 0] = 0.0
    cauchy[0, 0] = 0.0

    m = mu.values
    workers = _workers()

    def s_transform(arr):
        return sfft.ifft2(beurling * sfft.fft2(arr, workers=workers),
                          workers=workers)

    phi = m.copy()
    support = np.abs(grid.mesh()) <= mu.support_radius
    residual = 0.0
    iterations = 0
    if mu.sup > 0.0:
        for iterations in range(1, max_iter + 1):
            s_phi = s_transform(phi)
            new_phi = m * (1.0 + s_phi)
            num = np.linalg.norm((new_phi - phi)[support])
            den = np.linalg.norm((1.0 + s_phi)[support])
            increment = num / max(den, 1e-30)
            phi = new_phi
            if increment < tol:
                break
        # true residual of the returned iterate
        wz = 1.0 + s_transform(phi)
        num = np.linalg.norm((phi - m * wz)[support])
        residual = num / max(np.linalg.norm(wz[support]), 1e-30)
        if residual > tol:
            raise NoConvergence(
                f"residual {residual:.3e} > tol {tol:.3e} "
                f"after {iterations} iterations",
                residual=residual, iterations=iterations)
    # The periodic Cauchy multiplier drops the zero mode of phi; that part
    # of w_zbar is carried exactly by a conj(z) term instead.
    phi0 = np.mean(phi)
    u = sfft.ifft2(cauchy * sfft.fft2(phi, workers=workers), workers=workers)
    z = grid.mesh()
    w = z + phi0 * np.conj(z) + u
    pm = normalize_plane_map(PlaneMap(grid, w))
    pm.residual = float(residual) if np.isfinite(residual) else 0.0
    pm.iterations = iterations
    return pm


def dilatation(f: PlaneMap) -> BeltramiField:
    """Complex dilatation mu(f) = f_zbar / f_z by centered differences.

    Exact for affine maps.  A two-cell boundary ring is excluded (set to
    zero); the support radius is fitted to the nonzero cells.
    """
    grid = f.grid
    h = grid.cell
    v = f.values
    fx = np.empty_like(v)
    fy = np.empty_like(v)
    fx[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h)
    fy[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * h)
    fx[:, 0] = fx[:, 1]
    fx[:, -1] = fx[:, -2]
    fy[0, :] = fy[1, :]
    fy[-1, :] = fy[-2, :]
    fz = (fx - 1j * fy) / 2.0
    fzb = (fx + 1j * fy) / 2.0
    interior = np.zeros(v.shape, dtype=bool)
    interior[2:-2, 2:-2] = True
    if np.any(np.abs(fz[interior]) < 1e-12):
        raise DegenerateJacobian("|f_z| below 1e-12 on the grid")
    mu = np.zeros_like(v)
    mu[interior] = fzb[interior] / fz[interior]
    jac = np.abs(fz[interior]) ** 2 - np.abs(fzb[interior]) ** 2
    if np.any(jac <= 0):
        raise DegenerateJacobian("orientation-reversing cells in dilatation")
    z = np.abs(grid.mesh())
    nz = np.abs(mu) > 1e-13
    support = float(np.max(z[nz])) + grid.cell if np.any(nz) else grid.cell
    return BeltramiField(grid, mu, min(support, grid.half_width * np.sqrt(2)))


def dilatation_sup(f: PlaneMap, mask) -> float:
    """Sup of the centered-difference dilatation over masked nodes.

    Unlike `dilatation`, never raises on degenerate cells elsewhere; meant
    for one-sided statistics around kinked maps (welding seams).
    """
    grid = f.grid
    h = grid.cell
    v = f.values
    fx = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * h)
    fy = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2 * h)
    fz = (fx - 1j * fy) / 2.0
    fzb = (fx + 1j * fy) / 2.0
    interior = np.zeros(v.shape, dtype=bool)
    interior[2:-2, 2:-2] = True
    sel = np.asarray(mask, dtype=bool) & interior
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(fzb[sel]) / np.abs(fz[sel])
    return float(np.max(ratio)) if ratio.size else 0.0


def maximal_dilatation(mu: BeltramiField) -> float:
    """K = (1 + sup|mu|) / (1 - sup|mu|)."""
    return (1.0 + mu.sup) / (1.0 - mu.sup)


def teichmuller_distance_upper(f_mu: BeltramiField,
                               g_mu: BeltramiField) -> float:
    """Half log K of the composed representative g o f^{-1}.

    The pointwise dilatation of the composition of normalized solutions is
    |(mu_g - mu_f) / (1 - conj(mu_f) mu_g)|; its sup gives K without
    solving.  This is an upper bound for the distance (one representative,
    no infimum).
    """
    if f_mu.grid != g_mu.grid:
        raise ValueError("fields must share a grid")
    if f_mu.sup > SUP_BUDGET or g_mu.sup > SUP_BUDGET:
        raise BudgetExceeded("sup|mu| exceeds 0.95")
    rel = np.abs((g_mu.values - f_mu.values)
                 / (1.0 - np.conj(f_mu.values) * g_mu.values))
    m = float(np.max(rel))
    if m >= 1.0:
        raise DegenerateJacobian("composed representative degenerates")
    return 0.5 * np.log((1.0 + m) / (1.0 - m))


def compose_dilatations(mu_g: np.ndarray, g_z: np.ndarray,
                        mu_f_at_g: np.ndarray) -> np.ndarray:
    """Dilatation of f o g from mu(g), g_z, and mu(f) evaluated at g(z)."""
    tau = np.conj(g_z) / g_z
    t = mu_f_at_g * tau
    return (mu_g + t) / (1.0 + np.conj(mu_g) * t)


def transport_dilatation(mu_at_inverse: np.ndarray,
                         m_z_at_inverse: np.ndarray) -> np.ndarray:
    """Push a field forward through a conformal map m.

    For conformal m, the field nu with nu(m(z)) = mu(z) * m'(z)/conj(m'(z))
    marks the same deformation on the image side.
    """
    phase = m_z_at_inverse / np.conj(m_z_at_inverse)
    return mu_at_inverse * phase


# -- reference fields and closed forms -------------------------------------

def radial_stretch_field(grid: GridSpec, k: float,
                         radius: float = 1.0) -> BeltramiField:
    """mu(z) = k z/zbar inside |z| <= radius, zero outside."""
    z = grid.mesh()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(z == 0, 0.0, z / np.conj(z))
    vals = np.where(np.abs(z) <= radius, k * ratio, 0.0)
    return BeltramiField(grid, vals, radius)


def radial_stretch_map(z, k: float, radius: float = 1.0):
    """Closed form w(z) = z |z/r|^{2k/(1-k)} inside, w(z) = z outside.

    Solves w_zbar = (k z/zbar) w_z on |z| < radius, fixes 0, 1 (for
    radius = 1) and infinity, and matches the identity across the circle.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    a = 2.0 * k / (1.0 - k)
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = z * (r / radius) ** a
    return np.where(r <= radius, np.where(r == 0, 0.0 + 0.0j, inside), z)


def bump_field(grid: GridSpec, center: complex, radius: float,
               amplitude: complex) -> BeltramiField:
    """Smooth compactly supported bump amplitude*exp(1 - 1/(1-s^2))."""
    z = grid.mesh()
    s2 = np.abs(z - center) ** 2 / radius ** 2
    with np.errstate(divide="ignore", over="ignore"):
        prof = np.where(s2 < 1.0, np.exp(1.0 - 1.0 / (1.0 - s2)), 0.0)
    vals = amplitude * prof
    support = abs(center) + radius
    return BeltramiField(grid, vals, support + grid.cell)
