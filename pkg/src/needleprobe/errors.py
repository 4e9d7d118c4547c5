"""Exception types shared across the package."""


class NeedleProbeError(Exception):
    """Base class for all package-specific failures."""


class QuadratureError(NeedleProbeError):
    """Panel refinement stalled above the requested tolerance."""


class SingularRayError(NeedleProbeError):
    """Evaluation requested on the singular ray where the integrand loses decay."""


class ScheduleError(NeedleProbeError):
    """Needle-schedule construction failed (geometry or search budget)."""


class GeometryError(NeedleProbeError):
    """Invalid scan geometry (self-intersection, overlap, disconnected domain)."""


class SolverError(NeedleProbeError):
    """Boundary-integral solve failed or did not meet its residual tolerance."""


class BasisMismatchError(NeedleProbeError):
    """Two boundary operators do not share a common basis."""
