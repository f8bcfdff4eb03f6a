import numpy as np
import pytest

from qsweld.circlemaps import identity_circle_map, sine_perturbation
from qsweld.surfaces import Disk, RiggedSurface


@pytest.fixture(scope="session")
def four_boundary_surface():
    """Disk of radius 2 minus three small disks, mixed riggings.

    Geometry leaves room for a full log-linear twist collar around the
    boundary at 0.55 inside the solver support budget at L = 2.
    """
    return make_four_boundary()


def make_four_boundary(m=256):
    disks = [Disk(0j, 0.1), Disk(0.55 + 0j, 0.1),
             Disk(-0.55 + 0j, 0.1), Disk(0j, 2.0, exterior=True)]
    riggings = [sine_perturbation(0.2, m),
                sine_perturbation(-0.15, m, mode=2),
                sine_perturbation(0.1, m),
                identity_circle_map(m)]
    return RiggedSurface(disks, riggings, ["out", "in", "in", "out"])


def circle(radius=1.0, center=0j, n=512):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return center + radius * np.exp(1j * th)
