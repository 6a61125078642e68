"""Exception hierarchy."""


class TlabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(TlabError, ValueError):
    pass


class NonFiniteInput(TlabError, ValueError):
    pass


class EmptySample(TlabError):
    """No admissible point of a set was found in the probe ball."""


class NotInSet(TlabError, ValueError):
    pass


class EpsilonTooLarge(TlabError, ValueError):
    """The inverse-projection test rejected every candidate direction."""


class IntersectionLocatorFailed(TlabError):
    pass


class NonUnitPair(TlabError, ValueError):
    pass


class NoDecay(TlabError):
    """A trace has no strictly decaying tail to fit a rate to."""


class InconsistentInputs(TlabError, ValueError):
    pass


class NonConvexScenario(TlabError, ValueError):
    pass


class ScenarioFormatError(TlabError, ValueError):
    pass
