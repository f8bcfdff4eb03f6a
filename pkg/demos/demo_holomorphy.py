"""Holomorphy verdicts on parameter families, with a failing control.

Three families of capped-surface invariants over a ring stencil of the
complex parameter t:

  1. marking scaled holomorphically (t * nu)      -> passes,
  2. the anti-holomorphic control (conj(t) * nu)  -> fails loudly,
  3. a translating cut-out disk                   -> passes.

The verdict machinery is falsifiable evidence, not proof: it estimates
d/d(conj t) against d/dt from samples alone.
"""

import numpy as np

from qsweld import GridSpec
from qsweld.beltrami import bump_field
from qsweld.circlemaps import identity_circle_map, sine_perturbation
from qsweld.holotest import Stencil, cr_residual
from qsweld.surfaces import Disk, RiggedSurface, capped_invariants, sew_caps

grid = GridSpec(2.0, 256)
disks = [Disk(0j, 0.1), Disk(0.55 + 0j, 0.1), Disk(-0.55 + 0j, 0.1),
         Disk(0j, 2.0, exterior=True)]
riggings = [sine_perturbation(0.2, 256),
            sine_perturbation(-0.15, 256, mode=2),
            sine_perturbation(0.1, 256),
            identity_circle_map(256)]
x = RiggedSurface(disks, riggings, ["out", "in", "in", "out"])
nu = bump_field(grid, 0.33j, 0.12, 0.4)
radii = (0.015, 0.03)

v = cr_residual(Stencil.from_function(
    lambda t: capped_invariants(x, grid, extra_field=nu.scaled(t)),
    0j, radii))
print(f"holomorphic marking family: cr {v.cr_residual:.2e} "
      f"pass={v.passed}")

v = cr_residual(Stencil.from_function(
    lambda t: capped_invariants(x, grid,
                                extra_field=nu.scaled(np.conj(t))),
    0j, radii))
print(f"anti-holomorphic control:   cr {v.cr_residual:.2e} "
      f"pass={v.passed}")

mu0 = bump_field(grid, -0.5 + 0j, 0.35, 0.45)


def moving_cutout(t):
    surf = RiggedSurface([Disk(0.45 + t * (1 + 0.5j), 0.22)],
                         [identity_circle_map(64)], ["out"], marking=mu0)
    return sew_caps(surf, grid).marked_points[:1]


v = cr_residual(Stencil.from_function(moving_cutout, 0j, radii))
print(f"translating cut-out family: cr {v.cr_residual:.2e} "
      f"pass={v.passed}")
