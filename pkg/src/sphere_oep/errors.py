"""Exception types shared across the toolkit."""


class SphereOEPError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SphereOEPError):
    """Input outside the admissible domain of an evaluator."""


class NoZeroFoundError(SphereOEPError):
    """Profile integration reached the pole without the solution vanishing.

    Usually signals a source term violating the positivity assumptions.
    """


class StepFailureError(SphereOEPError):
    """The adaptive integrator underflowed its step size."""


class TauRangeError(SphereOEPError):
    """Requested tau value lies outside the tabulated curve range."""


class NonConvergenceError(SphereOEPError):
    """Newton iteration failed to reach the requested residual."""


class SingularLinearizationError(SphereOEPError):
    """The linearized operator in a Newton step is numerically singular."""


class FitError(SphereOEPError):
    """No model solution realizes the requested annulus."""


class ExtractionError(SphereOEPError):
    """Level-curve or max-set extraction failed."""
