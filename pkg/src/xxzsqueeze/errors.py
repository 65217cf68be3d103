"""Exception types shared across the package."""


class XXZSqueezeError(Exception):
    """Base class for package-specific errors."""


class CapacityError(XXZSqueezeError):
    """State-vector size exceeds the configured exact-evolution cap."""


class IntegrationError(XXZSqueezeError):
    """Time integration failed (step-size underflow or non-convergence).

    Carries the time reached and, for trajectory ensembles, the trajectory index.
    """

    def __init__(self, message, t_reached=None, trajectory=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.trajectory = trajectory


class DegenerateMeanSpinError(XXZSqueezeError):
    """Mean spin length below threshold; the squeezing parameter is undefined."""


class BoundaryNotFoundError(XXZSqueezeError):
    """No interior local minimum in the scanned slice (phase spans the slice)."""
