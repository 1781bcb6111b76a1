"""Exception hierarchy shared by all modules."""


class ShiftlabError(Exception):
    """Base class for every error raised by shiftlab."""


class HorizonExceeded(ShiftlabError):
    """A weight generator cannot produce the requested index."""


class InvalidWeight(ShiftlabError):
    """A weight evaluated to zero or to a non-finite value."""


class NotSummable(ShiftlabError):
    """The series sum 1/|w1...wn|^p is not certified convergent."""


class EmptyWitnessSet(ShiftlabError):
    pass


class ZeroScalar(ShiftlabError):
    pass


class InternalInconsistency(ShiftlabError):
    """Two rules reached contradictory Established conclusions."""


class InfiniteMoment(ShiftlabError):
    pass


class UnsupportedKind(ShiftlabError):
    pass


class QuadratureFailure(ShiftlabError):
    pass


class SupportContainsZero(ShiftlabError):
    pass


class NoDensity(ShiftlabError):
    pass


class InsufficientHorizon(ShiftlabError):
    pass


class NoDiscontinuityList(ShiftlabError):
    pass


class HypothesisViolation(ShiftlabError):
    pass


class NoWitnessFound(ShiftlabError):
    pass


class ConfigError(ShiftlabError):
    pass
