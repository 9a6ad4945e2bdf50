"""Exception types shared across the simulator."""


class ZenosimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ZenosimError):
    """An object violates one of its structural invariants."""


class DimensionMismatchError(ValidationError):
    """Operands act on incompatible spaces."""


class InvalidStateError(ZenosimError):
    """A weight operator is unusable as a state (e.g. non-positive trace)."""


class DegenerateBranchError(ZenosimError):
    """A sampled answer selected a branch of essentially zero weight."""


class CapacityError(ZenosimError):
    """A requested object exceeds the supported size limits."""


class PreconditionError(ZenosimError):
    """An operation's stated precondition does not hold for these inputs."""


class DegenerateFitError(ZenosimError):
    """Too few usable points to perform a least-squares fit."""


class ConfigurationError(ZenosimError):
    """A scenario or operation was configured inconsistently."""


class ScenarioExecutionError(ZenosimError):
    """A numeric or I/O failure while executing an already-valid scenario."""
