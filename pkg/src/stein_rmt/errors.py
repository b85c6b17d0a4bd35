"""Exception types shared across the package."""


class SteinRmtError(Exception):
    """Base class for package-specific failures."""


class OutOfRegimeError(SteinRmtError):
    """A closed form was requested outside the regime in which it is valid."""


class SingularConfigurationError(SteinRmtError):
    """An angle configuration has (near-)colliding points where a cotangent blows up."""


class ConsistencyError(SteinRmtError):
    """An internal self-check failed (e.g. a provably-real quantity came out complex)."""


class StepFailureError(SteinRmtError):
    """A diffusion step could not be completed within the retry budget."""


class QuadratureError(SteinRmtError):
    """Adaptive quadrature failed to converge; carries interval diagnostics."""
