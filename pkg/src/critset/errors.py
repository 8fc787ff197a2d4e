"""Exception and warning types shared across the toolkit.

Numerical failures derive from :class:`NumericalError`; the CLI maps them to
exit status 2 and reports the class name. Precondition violations raise plain
``ValueError`` and are treated as usage errors.
"""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure on valid input."""


class DegenerateVectorError(NumericalError):
    """A zero vector appeared where a direction was required."""


class ResolutionError(NumericalError):
    """Sampling too coarse for a continuous quantity to be resolved."""


class RefinementFailure(NumericalError):
    """The integrator could not meet its tolerance at the configured step count."""


class WindowTooSmallError(NumericalError):
    """A traced curve touches the boundary of the scan window."""


class RankDeficiencyError(NumericalError):
    """The Jacobian has a two-dimensional kernel."""


class InconsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""


class NearCriticalValueError(NumericalError):
    """A target lies too close to the image of the critical set."""


class RadiusAdjustmentError(NumericalError):
    """The image of a degree circle passes too close to the target."""


class NotProperError(NumericalError):
    """The map is not proper on the requested window scale."""


class CorrectionWindowError(NumericalError):
    """A one-parameter correction could not restore the constraint."""


class NotProjectableError(NumericalError):
    """No constant shift brings the function onto the critical set."""


class ComponentStructureError(NumericalError):
    """The requested critical component has no reference constant."""


class NotLocallyConvexError(NumericalError):
    """A sphere curve fails the local convexity certificate."""


class InsufficientResolutionError(NumericalError):
    """A least-squares or spectral residual exceeds its acceptance bound."""


class DegenerateNormalizationError(NumericalError):
    """A vector to be normalized vanished."""


class NonMembershipError(NumericalError):
    """A potential pair does not have an all-periodic solution space."""


class DegeneratePointWarning(UserWarning):
    """A critical point where the gradient of the Jacobian determinant vanishes."""


class InconclusiveScanWarning(UserWarning):
    """A sampled range scan could not decide a strict-interior question."""
