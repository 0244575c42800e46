"""Exception hierarchy shared by all modules."""


class TikhonovError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteOutput(TikhonovError):
    """A model function returned NaN or Inf."""


class SingularMatrix(TikhonovError):
    """LU factorisation met a pivot below the singularity threshold."""

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = pivot


class SingularJacobian(SingularMatrix):
    """g_v is singular at a quasi-steady-state iterate (isolation fails)."""


class NoConvergence(TikhonovError):
    """An iterative method exhausted its iteration budget."""


class IntegrationError(TikhonovError):
    """Base class for failures inside the ODE integrators."""


class StepUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class Divergence(IntegrationError):
    """Layer solution left every bounded set (initial value outside the basin)."""


class BoundednessViolation(TikhonovError):
    """The slow curve exceeded the configured bound."""


class HypothesisViolated(TikhonovError):
    """A sampled spectral bound is non-negative where negativity is required."""


class NoEquilibriumDeclared(TikhonovError):
    pass
