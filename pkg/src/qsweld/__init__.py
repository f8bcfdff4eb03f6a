"""qsweld: conformal welding, Beltrami solvers, and genus-zero sewing."""

__version__ = "0.1.0"

from .beltrami import (dilatation, maximal_dilatation, solve_beltrami,
                       teichmuller_distance_upper)
from .circlemaps import (CircleMap, annulus_interpolation_extend,
                         beurling_ahlfors_extend, compose,
                         identity_circle_map, invert, make_circle_map,
                         qs_constant, qs_constant_line, rotation_map)
from .grids import BeltramiField, GridSpec, PlaneMap
from .holotest import HoloVerdict, Stencil, cr_residual, holomorphy_report
from .mobius import Mobius, cross_ratio
from .motions import (CutoutFamily, MotionFamily, RiggingFamily,
                      embed_in_motion, family_of_cutouts, rigging_family)
from .surfaces import (Disk, PuncturedSurface, RiggedSurface, SewnSurface,
                       annulus_surface, capped_invariants,
                       dehn_twist_boundary, invariants, modulus, s_beltrami,
                       sew, sew_caps, sew_caps_two_stage, sew_t,
                       sew_t_two_orders)
from .welding import (QuasicircleReport, WeldingResult, quasicircle_check,
                      weld, welding_residual)

__all__ = [name for name in dir() if not name.startswith("_")]
