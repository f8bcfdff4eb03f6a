"""Exception types shared by all qsweld modules."""


class QsweldError(Exception):
    """Base class for qsweld errors."""


class NonMonotone(QsweldError):
    """Circle-map lift samples are not strictly increasing."""


class WrongDegree(QsweldError):
    """Circle-map lift does not advance by 2*pi over one turn."""


class DegenerateRatio(QsweldError):
    """Quasisymmetry ratio denominator collapsed; sampling too coarse."""


class ExtensionDegenerate(QsweldError):
    """A constructed extension lost injectivity (Jacobian sign flip)."""


class RadiiOrder(QsweldError):
    """Annulus radii out of order (inner >= outer)."""


class NoConvergence(QsweldError):
    """Iterative solver did not reach the requested residual."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class BudgetExceeded(QsweldError):
    """An input exceeds a documented numerical budget (e.g. sup|mu|)."""


class DegenerateJacobian(QsweldError):
    """Grid map has vanishing or negative Jacobian somewhere."""


class ResidualTooLarge(QsweldError):
    """Welding identity residual exceeded the requested tolerance."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class SelfIntersecting(QsweldError):
    """Polyline expected to be Jordan crosses itself."""


class OrientationMismatch(QsweldError):
    """Sewing requires an outgoing boundary glued to an incoming one."""


class ChartMismatch(QsweldError):
    """Seam charts disagree beyond tolerance; construction failed."""


class NonNested(QsweldError):
    """Modulus computation needs one boundary strictly inside the other."""


class CollarTooWide(QsweldError):
    """Requested twist collar hits another boundary."""


class MonotonicityLost(QsweldError):
    """Rigging family leaves the space of circle maps inside the t-disk."""


class CutoutEscapes(QsweldError):
    """Cut-out disk family leaves its reference neighborhood."""


class DegenerateAffine(QsweldError):
    """Affine correction of a motion becomes orientation-reversing."""


class IllConditioned(QsweldError):
    """Stencil unusable for a derivative fit (collinear or duplicated)."""


class MissingSample(QsweldError):
    """Family manifest lacks a sample required by the stencil."""


class DimensionMismatch(QsweldError):
    """Invariant vectors in a family have inconsistent dimensions."""


class RealOnlyInvariant(QsweldError):
    """Holomorphy verdicts need complex data; a real-only selector was given."""
