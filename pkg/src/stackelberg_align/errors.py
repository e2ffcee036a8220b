"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the CLI can emit a
machine-readable line without string matching.
"""

from __future__ import annotations


class AlignError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# scenario / profile validation
class ValidationError(AlignError, ValueError):
    pass


class NonProbabilityPrior(ValidationError):
    pass


class TemptationOrderViolated(ValidationError):
    pass


class AmbiguousRewards(ValidationError):
    pass


class DiscountOutOfRange(ValidationError):
    pass


class NegativeCost(ValidationError):
    pass


class MalformedInput(ValidationError):
    """Structural problems: missing keys, wrong types, duplicate ids."""


class ProbabilityOutOfRange(ValidationError):
    pass


class IncompleteProfile(ValidationError):
    pass


class PreferredContentNotFullyEngaged(ValidationError):
    pass


class OccasionalEngagementForbidden(ValidationError):
    pass


class SignalOnPreferred(ValidationError):
    pass


class SignalWithoutDiscouragement(ValidationError):
    pass


class SignalingDisabled(ValidationError):
    """A nonzero signal probability in a scenario without a signaling cost."""


class UnknownTypeId(AlignError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class ZeroProbabilityObservation(AlignError, ValueError):
    pass


# solver
class SolverError(AlignError):
    pass


class DegenerateGamma(SolverError):
    pass


class ConditionNotCovered(SolverError):
    pass


class NotConverged(SolverError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class CycleDetected(NotConverged):
    def __init__(self, message: str, result=None, cycle=None):
        super().__init__(message, result)
        self.cycle = cycle or []


# oracle
class OracleError(AlignError):
    pass


class HorizonTooLarge(OracleError, ValueError):
    pass


class DeviationFound(OracleError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
