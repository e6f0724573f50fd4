"""Exception types shared across the package."""


class LyapmapError(Exception):
    """Base class for all package-specific errors."""


class DegenerateMap(LyapmapError):
    """Numerator and denominator share a root: the homogeneous resultant vanishes."""


class IterationOverflow(LyapmapError):
    """An iterate's coefficient count would exceed the configured cap."""


class RootFindingDivergence(LyapmapError):
    """The simultaneous root finder failed to reach tolerance within its budget.

    Usually means the working precision is too low for the requested period.
    """


class AmbiguousMatch(LyapmapError):
    """A periodic point sits inside the matching band of a lower-period point.

    Signals that precision escalation is needed before exact-period filtering
    can be trusted.
    """


class ModeUnavailable(LyapmapError):
    """An exact-period estimator mode was requested without all divisor levels solved."""


class PreimageFailure(LyapmapError):
    """A backward-iteration step could not solve the preimage polynomial."""


class CriticalPointInput(LyapmapError):
    """An evaluation point coincides with a critical point within matching tolerance."""


class DegreeCapExceeded(LyapmapError):
    """An exact composition would exceed the configured degree cap."""


class InternalInconsistency(LyapmapError):
    """An impossible intermediate value was produced; indicates a bug."""


class ParseError(LyapmapError):
    """Malformed map specification text."""

    def __init__(self, message, position):
        super().__init__("%s (at position %d)" % (message, position))
        self.position = position


class DegreeError(LyapmapError):
    """The parsed map has degree below 2."""
