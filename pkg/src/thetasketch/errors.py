"""Exception types shared across the package."""


class ThetaSketchError(Exception):
    """Base class for all errors raised by this package."""


class SeedMismatch(ThetaSketchError):
    """Set operations require all input sketches to share one hash seed."""


class EmptyInput(ThetaSketchError):
    """A combining operation received no sketches."""


class IdsUnavailable(ThetaSketchError):
    """A non-trivial predicate was applied to a sketch without identifiers."""


class WrongKind(ThetaSketchError):
    """An operation was applied to a sampler of an incompatible kind."""


class DomainError(ThetaSketchError):
    """Arguments outside the domain of a closed-form oracle."""


class UnsupportedQ(ThetaSketchError):
    """No closed form is available for this moment order."""


class ResourceLimit(ThetaSketchError):
    """A request exceeded the configured size limit for exact computation."""


class ParseError(ThetaSketchError):
    """A sketch file could not be parsed."""


class InvariantError(ThetaSketchError):
    """A deserialized sketch violates the sketch invariants."""
