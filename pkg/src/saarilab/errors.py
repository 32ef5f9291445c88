"""Exception hierarchy for saarilab."""


class SaariLabError(Exception):
    """Base class for every error raised by the package."""


class CollisionSingularity(SaariLabError):
    """A mutual distance fell below the collision threshold."""


class DegenerateExponent(SaariLabError, ValueError):
    """The potential exponent is outside the range an operation supports."""


class ToleranceFailure(SaariLabError):
    """The adaptive step controller could not meet the requested tolerance.

    The partial trajectory (terminated with ``ToleranceFailure``) is kept on
    the ``trajectory`` attribute.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NoRoot(SaariLabError):
    """No sign change of the target function inside the scanned bracket."""


class RootNotBracketed(NoRoot):
    pass


class ZeroInertia(SaariLabError):
    pass


class NegativeRhoSquared(SaariLabError):
    """The E-route for rho squared came out negative (inconsistent mu)."""


class SundmanViolation(SaariLabError):
    pass


class PreconditionViolated(SaariLabError, ValueError):
    pass


class DegenerateShape(SaariLabError):
    """All pair differences vanish, so no similarity factor exists."""


class CentralConfiguration(SaariLabError):
    """The shape is (numerically) a central configuration, rho ~ 0."""


class EmptyContour(SaariLabError):
    pass


class InsufficientPoints(SaariLabError):
    pass


class NotAsymptotic(SaariLabError):
    pass
