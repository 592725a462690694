"""Numerical lab for a two-fluid interface with surface tension in the plane."""

__version__ = "0.1.0"

from .curve import ClosedCurve, circle, ellipse, perturbed_circle
from .errors import (
    CFLError,
    ConditioningError,
    ConfigError,
    ContractError,
    EnergyBoundExceeded,
    GeometryError,
    InterfaceLabError,
    ResolutionWarning,
    TruncationError,
)
from .layers import dtn, dtn_bar, dtn_combined, dtn_inverse, harmonic_extend

__all__ = [
    "ClosedCurve", "circle", "ellipse", "perturbed_circle",
    "dtn", "dtn_bar", "dtn_combined", "dtn_inverse", "harmonic_extend",
    "CFLError", "ConditioningError", "ConfigError", "ContractError", "EnergyBoundExceeded",
    "GeometryError", "InterfaceLabError", "ResolutionWarning", "TruncationError",
]
