"""
Laboratory Errors
Exception hierarchy shared by every module of the laboratory
"""


class LabError(Exception):
    """Base class for all laboratory errors"""


class DomainError(LabError, ValueError):
    """Density outside the admissible interval of a pressure law"""


class QuadratureError(LabError):
    """Adaptive quadrature failed to reach its tolerance"""


class CertificateError(LabError):
    """No constants validate a convexity or admissibility certificate"""


class GridMismatch(LabError, ValueError):
    """Fields or operators defined on incompatible grids"""


class GridError(LabError, ValueError):
    """Grid too coarse or otherwise unfit for the requested construction"""


class SolverError(LabError):
    """Linear or spectral solve failed its tolerance"""


class MeanError(LabError, ValueError):
    """A field that must have zero mean does not"""


class CFLError(LabError):
    """Time step violates the stability constraint"""


class CurlError(LabError, ValueError):
    """A field that must be a discrete gradient is not"""


class WindowError(LabError):
    """Fit window does not span the required range"""


class ResolutionError(LabError):
    """Spectral tail grew beyond the resolution threshold"""


class DensityError(LabError):
    """Density left the admissible band below the packing limit"""


class SyncError(LabError):
    """Snapshot sets are not synchronized in time or grid"""


class ParameterError(LabError, ValueError):
    """Scaling parameters outside the admissible range"""


class ConfigError(LabError, ValueError):
    """Study configuration violates an admissibility condition"""


class FitError(LabError):
    """Rate fit impossible on the given rows"""
