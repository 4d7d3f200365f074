"""Exception hierarchy shared by all qregress modules.

Three branches map onto the CLI exit codes: :class:`ValidationError`
(bad inputs or configuration, exit 2), :class:`NumericError` (a
computation could not be completed, exit 3) and :class:`IoFailure`
(exit 4).
"""


class QRegressError(Exception):
    """Base class for all qregress errors."""


class ValidationError(QRegressError):
    """Input or configuration violates a documented precondition."""


class DimensionMismatch(ValidationError):
    """Matrix shapes or operator/state dimensions are incompatible."""


class AsymmetryTooLarge(ValidationError):
    """Matrix deviates from symmetry by more than the 1e-12 gate."""


class NotUnitTrace(ValidationError):
    """Density matrix trace differs from 1 beyond tolerance."""


class NotPositiveSemiDefinite(ValidationError):
    """Density matrix has an eigenvalue below -1e-10."""


class ZeroBeta(ValidationError):
    """The true slope must be nonzero."""


class TooFewReplications(ValidationError):
    """Not enough values to run the requested statistic."""


class NumericError(QRegressError):
    """A numeric computation failed or the data cannot support it."""


class EigensolverFailure(NumericError):
    """Symmetric eigensolver did not converge."""


class DegenerateDesign(NumericError):
    """All predictor values are zero, so no slope is identifiable."""


class EmptySupport(NumericError):
    """Probability mass function has no support points."""


class BracketFailure(NumericError):
    """Objective never rose during bracket expansion; it looks unbounded."""


class NonFiniteMoment(NumericError):
    """Monte Carlo moment estimate is non-finite or dominated by one draw."""


class DegenerateNormalization(NumericError):
    """Normalization constants do not define a finite statistic."""


class IoFailure(QRegressError):
    """Reading or writing an artifact failed."""


class AtDiscontinuity(UserWarning):
    """Loss derivative was evaluated at a kink; the subgradient midpoint
    was returned. Informational: continuous error laws hit kinks with
    probability zero."""
