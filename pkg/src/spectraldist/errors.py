"""Exception types shared across the package."""


class SpectralDistError(Exception):
    """Base class for all package errors."""


class DomainError(SpectralDistError):
    """Input outside the operation's domain of validity."""


class CapabilityError(SpectralDistError):
    """Requested order or size exceeds a supported cap."""


class AccuracyError(SpectralDistError):
    """Quadrature or extrapolation failed to converge.

    Carries the best available estimate and its error bound so callers can
    decide whether to accept a degraded result.
    """

    def __init__(self, message, best=None, estimated_error=None):
        super().__init__(message)
        self.best = best
        self.estimated_error = estimated_error


class BoundaryError(SpectralDistError):
    """Evaluation point sits on a boundary where the limit formula fails."""


class ConditioningError(SpectralDistError):
    """Similarity transform too ill-conditioned for the requested tolerance."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ModelError(SpectralDistError):
    """Multiplication-operator model violates its invariants."""


class NearPoleError(SpectralDistError):
    """Resolvent requested too close to a zero of C(z)."""


class DegeneratePoleError(SpectralDistError):
    """Simple-pole formula applied at a degenerate (double) zero."""


class DegeneracyError(SpectralDistError):
    """Moment integral vanishes; the Jordan-pair construction degenerates."""


class RegimeError(SpectralDistError):
    """Spectral-density formula applied outside its regime of validity."""


class SpectralSingularityError(RegimeError):
    """|C(x + i0)| vanishes on the continuous spectrum."""


class SearchError(SpectralDistError):
    """Zero search could not isolate the spectrum in the given region."""


class IncompleteInputError(SpectralDistError):
    """A check was invoked before its prerequisites were computed."""


class ConfigError(SpectralDistError):
    """CLI configuration is malformed or violates the schema."""
