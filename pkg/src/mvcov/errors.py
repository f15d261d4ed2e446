"""Exception hierarchy shared by all mvcov modules."""


class MvcovError(Exception):
    """Base class for all mvcov errors."""


class NonPositiveDepth(MvcovError):
    """Point is behind or on the camera plane (z <= 1e-9)."""


class DegenerateWarp(MvcovError):
    """Homographic warp degenerates (dehomogenizing coordinate ~ 0)."""


class BackFacing(MvcovError):
    """Surface normal does not face the camera in one of the views."""


class OutOfBounds(MvcovError):
    """Pixel (or patch) falls outside the valid image area."""


class InsufficientDepth(MvcovError):
    """Too few valid depth pixels in the fitting window."""


class DegenerateFit(MvcovError):
    """Plane fit is rank deficient (points nearly collinear)."""


class SingularCovariance(MvcovError):
    """Covariance matrix is numerically singular; caller should zero-weight."""


class SingularInformation(MvcovError):
    """Information matrix is singular; entropy is +inf."""


class SingularNormalEquations(MvcovError):
    """Damped normal equations remained singular at maximum damping."""


class TooFewPoses(MvcovError):
    """Trajectory alignment needs at least two associated poses."""


class MalformedLine(MvcovError):
    """A dataset text file contains a line that cannot be parsed."""

    def __init__(self, path, line_number, message):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = path
        self.line_number = line_number


class MissingFile(MvcovError):
    """A file referenced by a dataset or config does not exist."""


class ConfigError(MvcovError):
    """Experiment configuration is invalid (unknown key, bad value, ...)."""
