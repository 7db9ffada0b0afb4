"""Exception hierarchy. Every error is also a ``ValueError``."""


class MapconesError(ValueError):
    pass


class DimensionError(MapconesError):
    pass


class NotHermitianError(MapconesError):
    """A matrix or map lacks the required (anti-)hermitian symmetry."""


class NotCompletelyPositiveError(MapconesError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NotIdempotentError(MapconesError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class UnsupportedError(MapconesError):
    """The requested construction is not available for this input."""


class UnsupportedIdempotentError(UnsupportedError):
    """No sampled description of the constraint set exists for this idempotent."""


class PreconditionError(MapconesError):
    pass


class SchemaError(MapconesError):
    """Input document is well-formed JSON but does not describe a valid object."""
