"""Exception types shared across the package."""


class NanoemitError(Exception):
    """Base class for all package errors."""


class ConfigError(NanoemitError):
    """A run configuration could not be parsed or fails validation."""


class GeometryError(NanoemitError):
    """Invalid geometry parameters (non-positive spacing, non-unit axis, ...)."""


class UnsupportedGeometryError(NanoemitError):
    """Requested operation does not support this emitter arrangement."""


class CouplingMatrixError(NanoemitError):
    """A coupling matrix violates a structural requirement (e.g. PSD)."""


class DistanceRangeError(NanoemitError):
    """An emitter pair falls outside the tabulated radial range."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ResourceGuardError(NanoemitError):
    """Problem size exceeds a hard resource guard (exact solver N limit)."""


class IntegrationError(NanoemitError):
    """Time integration failed; carries the time stamp of the failure."""

    def __init__(self, message, t_fs=None):
        super().__init__(message)
        self.t_fs = t_fs
