"""Exception hierarchy shared by every module."""


class PdeBoundsError(Exception):
    """Base class for all library errors."""


class EmptyStratum(PdeBoundsError):
    """A requested covariate stratum carries zero total weight."""


class UndefinedConditional(PdeBoundsError):
    """A conditional probability is needed but its conditioning event has zero weight."""


class MismatchedSupport(PdeBoundsError):
    """Probability tables disagree on the size of a shared support."""


class MonotonicityViolated(PdeBoundsError):
    """Observed exposure-confounder marginals contradict A-R monotonicity."""


class NotBinaryR(PdeBoundsError):
    """The closed-form binary-R bounds were requested for a non-binary confounder."""


class Infeasible(PdeBoundsError):
    """The cross-world linear program has an empty feasible region."""


class SolverError(PdeBoundsError):
    """The simplex kernel stopped without an optimal vertex."""


class TooLarge(PdeBoundsError):
    """A problem exceeds the size that exhaustive enumeration can handle."""


class IncoherentBounds(PdeBoundsError):
    """Combined covariate-adjusted bounds cross (lower exceeds upper)."""


class EstimatorFailed(PdeBoundsError):
    """Too many bootstrap replicates failed to produce an estimate."""

    def __init__(self, message, replicate=None):
        super().__init__(message)
        self.replicate = replicate


class ConfigError(PdeBoundsError):
    """Invalid run configuration or input file."""
