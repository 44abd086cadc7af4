"""Exception hierarchy shared by every module."""


class SIAError(Exception):
    """Base class for all errors raised by this package."""


# belief algebra

class InvalidFrame(SIAError, ValueError):
    pass


class InvalidBBA(SIAError, ValueError):
    pass


class EmptyFocalSet(InvalidBBA):
    pass


class FrameMismatch(SIAError, ValueError):
    pass


class TotalConflict(SIAError):
    """Raised when a normalized combination meets conflict K = 1."""

    def __init__(self, message="total conflict (K = 1)", node=None, sources=()):
        super().__init__(message)
        self.node = node
        self.sources = tuple(sources)


# network structure

class UnknownVariable(SIAError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DuplicateId(SIAError, ValueError):
    pass


class CycleDetected(SIAError, ValueError):
    pass


class DegreeCapExceeded(SIAError, ValueError):
    pass


class IncompleteConditionalTable(SIAError, ValueError):
    pass


class TypeConstraintViolation(SIAError, ValueError):
    pass


class UnalignableVariables(SIAError, ValueError):
    pass


class MalformedElicitation(SIAError, ValueError):
    pass


class OverAllocatedMass(MalformedElicitation):
    pass


class UnsupportedTopology(SIAError):
    pass


# engine / harness

class AlreadyAsked(SIAError, ValueError):
    pass


class NotObservable(SIAError, ValueError):
    pass


class EmptyDataset(SIAError, ValueError):
    pass


# providers

class ProviderFailure(SIAError):
    pass


class FixtureMiss(ProviderFailure, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MalformedFixture(SIAError, ValueError):
    pass


class LimitExceeded(SIAError):
    """Construction hit a size, depth or degree limit (only raised on request)."""
