"""Exception and warning types shared across the package."""


class InterfaceLabError(Exception):
    """Base class for all errors raised by interface_lab."""


class GeometryError(InterfaceLabError):
    """Degenerate, self-intersecting or otherwise unusable curve."""


class ContractError(InterfaceLabError, ValueError):
    """An operation was called with input violating its precondition."""


class ConditioningError(InterfaceLabError):
    """A linear solve failed to converge or left a large residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TruncationError(InterfaceLabError):
    """Exterior data does not decay fast enough for the volume quadrature."""


class CFLError(InterfaceLabError):
    """Requested time step violates the surface-tension stability bound."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class EnergyBoundExceeded(InterfaceLabError):
    """Run aborted because the higher-order energy left its calibrated bound."""


class ConfigError(InterfaceLabError):
    """Malformed or incomplete run configuration."""


class ResolutionWarning(UserWarning):
    """The curve spectrum is not resolved to the requested tolerance."""
