"""Exception types raised across the package."""


class CRTError(Exception):
    """Base class for all package-specific errors."""


class InvalidDesignError(CRTError, ValueError):
    """Treated count outside [1, N-1], or otherwise impossible design."""


class LengthMismatchError(CRTError, ValueError):
    """Vector/matrix shapes do not line up."""


class SingularCovarianceError(CRTError):
    """Sample covariance of a covariate block is (numerically) singular."""

    def __init__(self, message, tier=None, condition=None):
        super().__init__(message)
        self.tier = tier
        self.condition = condition


class SamplerStallError(CRTError):
    """Rejection sampler exceeded its consecutive-rejection budget."""

    def __init__(self, message, tries=0, acceptance_rate=0.0):
        super().__init__(message)
        self.tries = tries
        self.acceptance_rate = acceptance_rate


class InsufficientDrawsError(CRTError, ValueError):
    """Too few reference draws for the requested neighborhood size."""


class EmptyArmError(CRTError, ValueError):
    """A test statistic needs at least one treated and one control unit."""


class AllStrataDroppedError(CRTError):
    """Every stratum lacked a treated or a control unit."""


class RankDeficiencyError(CRTError):
    """Least-squares design matrix is rank deficient."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class CountMismatchError(CRTError, ValueError):
    """Per-stratum treated counts disagree with the observed assignment."""


class EnumerationTooLargeError(CRTError):
    """The assignment space exceeds the exact-enumeration cap."""


class EvaluationFailureError(CRTError):
    """Too many Monte Carlo draws failed statistic evaluation."""

    def __init__(self, message, n_failed=0, n_draws=0):
        super().__init__(message)
        self.n_failed = n_failed
        self.n_draws = n_draws


class AllUnitsPrunedError(CRTError):
    """Coarsened-matching pruning removed every unit."""


class ZeroRangeError(CRTError, ValueError):
    """A covariate has zero range; equal-width binning is undefined."""


class SchemaError(CRTError, ValueError):
    """A config file or CSV does not match its documented schema."""
