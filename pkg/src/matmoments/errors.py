"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; the CLI maps these onto exit codes.
"""


class MomentProblemError(Exception):
    """Base class for all errors raised by this package."""


class MomentFileError(MomentProblemError):
    """Moment file is malformed or does not match the documented schema."""


class IndexOutOfRangeError(MomentProblemError, IndexError):
    """An index refers past the available moments or model generators."""


class InsufficientMomentsError(MomentProblemError):
    """The requested order/section needs moments beyond those supplied."""


class NonHermitianInputError(MomentProblemError):
    """A moment block deviates from Hermitian beyond the tolerance."""


class IndefiniteSectionError(MomentProblemError):
    """A Hankel section has a negative eigenvalue beyond the tolerance."""


class EmptyModelError(MomentProblemError):
    """The realized Hilbert-space section is {0} (all moments vanish)."""


class DeterminateInputError(MomentProblemError):
    """The operation requires an indeterminate problem (both defect
    estimates >= 1), but the supplied section is determinate."""


class NotFiniteRankError(MomentProblemError):
    """Unique-solution recovery needs a finite, section-stable rank; the
    supplied model does not provide one."""


class ExcludedPointError(MomentProblemError):
    """Evaluation requested inside the excluded disc around z = i."""


class HalfPlaneError(MomentProblemError):
    """Evaluation point is not in the open upper half plane."""


class LftSingularError(MomentProblemError):
    """The linear fractional transformation hit a numerically singular
    I + C(z) F(z); carries a condition estimate when available."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ContractionViolationError(MomentProblemError):
    """A Schur parameter value exceeds the unit-contraction bound."""


class NoConvergenceError(MomentProblemError):
    """Section doubling exhausted the policy without reaching the
    requested Cauchy gap; carries the gap history."""

    def __init__(self, message, gap_history=None, sections=None):
        super().__init__(message)
        self.gap_history = list(gap_history or [])
        self.sections = list(sections or [])


class QuadratureNonconvergentError(MomentProblemError):
    """Adaptive quadrature did not reach the requested tolerance."""


class PoleOnSupportError(MomentProblemError):
    """Transform evaluation point collides with the measure support."""
