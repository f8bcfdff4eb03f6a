"""Figure generation from qsweld experiment bundles (read-only)."""

__version__ = "0.1.0"

from .reader import MissingData, UnknownFigure
from .render import FIGURES, render

__all__ = ["FIGURES", "MissingData", "UnknownFigure", "render"]
