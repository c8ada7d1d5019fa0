"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors -> 2, data errors -> 3,
numerical errors -> 4.
"""


class RidgeBartError(Exception):
    """Base class for all package-specific errors."""


class DataError(RidgeBartError):
    """Invalid or unusable input data."""


class ConstantColumnError(DataError):
    """A continuous column has no spread, so it cannot be min-max scaled."""


class NonFiniteDataError(DataError):
    """Input contains NaN or infinite values."""


class UnknownLevelError(DataError):
    """A categorical value at prediction time was never seen in training."""


class SchemaMismatchError(DataError):
    """Prediction inputs do not match the training transform record."""


class NoSplittableVariableError(RidgeBartError):
    """Every predictor is exhausted at a node; the caller keeps it a leaf."""


class InvalidMoveError(RidgeBartError):
    """A structural tree edit targeted a node of the wrong kind."""


class NumericalError(RidgeBartError):
    """A linear-algebra factorization failed on supposedly SPD input."""


class SerializationError(RidgeBartError):
    """Base class for model-file encode/decode failures."""


class VersionMismatchError(SerializationError):
    """The stream was written by an incompatible format version."""


class TruncatedStreamError(SerializationError):
    """The stream ended early or is not parseable at all."""


class InvalidModelError(SerializationError):
    """The stream parsed but violates a model invariant."""
