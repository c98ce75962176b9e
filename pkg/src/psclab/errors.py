"""Exception hierarchy for the toolkit.

Every hard failure maps to a subclass of :class:`PscLabError` so callers
(and the CLI exit-code contract) can distinguish math failures from usage
errors without string matching.
"""


class PscLabError(Exception):
    """Base class for all toolkit errors."""


class InvalidMetricError(PscLabError):
    """Metric data violates a structural invariant (w <= 0, not SPD, ...)."""


class PoleConditionError(PscLabError):
    """Capped profile fails smooth-pole conditions beyond tolerance."""


class DomainError(PscLabError):
    """Input field violates a pointwise domain restriction (e.g. u <= 0)."""


class PreconditionError(PscLabError):
    """Operation precondition not met (end bands, decay, memberships...)."""


class CertificationError(PscLabError):
    """A positivity certificate failed; carries the offending certificate."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NeckQualityError(PscLabError):
    """Metric not close enough to the cylinder for the requested epsilon."""


class NeckIncompatibilityError(PscLabError):
    """Two necks cannot be matched (scale-ratio bound violated)."""


class RankError(PscLabError):
    """Degenerate sample set (too few independent fiber directions)."""


class StructureError(PscLabError):
    """A chain/assembly structural condition failed; names the culprit."""


class AssemblyError(PscLabError):
    """Surgery assembly verification failed; carries a report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConstructionError(PscLabError):
    """A profile search/construction could not satisfy its invariants."""


class SearchFailureError(PscLabError):
    """Parameter search exhausted; carries the best candidate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class StagedError(PscLabError):
    """A multi-stage deformation failed; names the failing stage."""

    def __init__(self, message, stage=None, inner=None):
        super().__init__(message)
        self.stage = stage
        self.inner = inner


class StepSizeError(PscLabError):
    """Requested time step violates the CFL bound."""


class InadmissibleSurgeryError(PscLabError):
    """Neck window too short/bad for the surgery template."""


class RunawayError(PscLabError):
    """Flow step budget exhausted without reaching extinction."""


class InvariantViolationError(PscLabError):
    """A monitored analytic invariant was violated beyond tolerance."""


class SolverError(PscLabError):
    """Iterative solver failed to converge; carries residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class RegimeError(PscLabError):
    """Input outside the admissible analytic regime (sign conditions)."""


class UsageError(PscLabError):
    """CLI/config parse error (exit code 2)."""
