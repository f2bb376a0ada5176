"""
Exception hierarchy for the spectral presheaf toolkit.

Every error is a ValueError so callers that only care about "bad input"
can catch one type. Errors that can point at a concrete counterexample
carry it in ``witness`` (always JSON-serialisable).
"""

from typing import Any, Optional


class SpectralPresheafError(ValueError):
    """Root of all toolkit errors."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness

    def to_dict(self) -> dict:
        return {
            'error': type(self).__name__,
            'message': str(self),
            'witness': self.witness,
        }


class ShapeMismatchError(SpectralPresheafError):
    """Two matrices (or a matrix and an algebra) disagree on block shape."""


class NotAProjectionError(SpectralPresheafError):
    pass


class NonCommutingError(SpectralPresheafError):
    pass


class ObjectMismatchError(SpectralPresheafError):
    """Composition or comparison across different algebras."""


class ContextInvariantError(SpectralPresheafError):
    """Atoms of a context are not a resolution of the identity."""


class CorruptPosetError(SpectralPresheafError):
    pass


class SizeBoundError(SpectralPresheafError):
    pass


class MissingContextError(SpectralPresheafError):
    """An image context is not stored in the target poset."""


class NotComposableError(SpectralPresheafError):
    pass


class NotAnIsomorphismError(SpectralPresheafError):
    pass


class LatticeLawError(SpectralPresheafError):
    pass


class SchemaError(SpectralPresheafError):
    """Input does not conform to a documented JSON schema or setting."""
