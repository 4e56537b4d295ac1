"""Exception hierarchy shared across the package."""


class SpatialTokError(Exception):
    """Base class for all package errors."""


class RangeError(SpatialTokError, ValueError):
    """A field was well-formed but outside its allowed range."""


class ParseError(SpatialTokError, ValueError):
    """Malformed token text.

    ``offset`` is the index into the input where parsing stopped and
    ``expected`` describes what the parser was looking for there.
    """

    def __init__(self, message: str, offset: int = 0, expected: str = ""):
        self.offset = offset
        self.expected = expected
        detail = f" at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(message + detail)


class GenerationExhausted(SpatialTokError, RuntimeError):
    """Rejection sampling ran out of attempts."""


class MissingRole(SpatialTokError, ValueError):
    """The object list lacks a valid source or target for the task kind."""


class UnresolvedReference(SpatialTokError, LookupError):
    """No scene object matches a (color, shape) reference."""


class AmbiguousReference(SpatialTokError, LookupError):
    """More than one scene object matches a (color, shape) reference."""


class EmptySuite(SpatialTokError, ValueError):
    """Accuracy requested over zero attempts."""


class IdMismatch(SpatialTokError, KeyError):
    """A prediction references an episode id that is not in the suite."""


class OracleFailure(SpatialTokError, RuntimeError):
    """An oracle plan failed simulation or a record failed its round-trip check."""
