"""Exception hierarchy shared across the package."""


class AeroemuError(Exception):
    """Base class for all package-specific errors."""


class InvalidValueError(AeroemuError):
    """A numeric argument was non-finite or otherwise out of domain."""


class OverflowValueError(AeroemuError):
    """Back-transform input too large to represent in 64-bit floats."""


class SchemaValidationError(AeroemuError):
    """Base for column-header validation failures."""


class MissingColumnError(SchemaValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing column: {name!r}")


class UnknownColumnError(SchemaValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown column: {name!r}")


class OrderMismatchError(SchemaValidationError):
    def __init__(self, name, expected):
        self.name = name
        self.expected = expected
        super().__init__(
            f"column order mismatch: found {name!r} where {expected!r} was expected"
        )


class SchemaHashMismatchError(AeroemuError):
    """Stored schema hash does not match the runtime schema."""


class SpaceTagError(AeroemuError):
    """A batch was passed in the wrong value space (raw/transformed/standardized)."""


class EmptyDatasetError(AeroemuError):
    """Dataset file or batch contains no rows."""


class DataFormatError(AeroemuError):
    """Malformed dataset file, bad magic, version or corrupted payload."""


class NonFiniteDataError(DataFormatError):
    """Dataset contains NaN or infinite entries."""

    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"non-finite value at row {row}, column {column!r}")


class CorruptCheckpointError(AeroemuError):
    """Checkpoint failed magic/version/CRC validation."""


class NonFiniteGradientError(AeroemuError):
    """Gradient contained NaN/inf; carries the offending layer index."""

    def __init__(self, layer):
        self.layer = layer
        super().__init__(f"non-finite gradient in layer {layer}")


class NumericalFailureError(AeroemuError):
    """Training or evaluation produced NaN/inf where finite values are required."""


class InvalidInputError(AeroemuError):
    """Physically invalid input, e.g. negative masses fed to the surrogate."""


class UsageError(AeroemuError):
    """Invalid CLI flag combination."""
