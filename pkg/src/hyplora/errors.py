"""Exception hierarchy shared across the toolkit.

``ValidationError`` subclasses map to CLI exit code 1, ``FormatError``
(and plain I/O errors) to exit code 2.
"""


class ValidationError(ValueError):
    """Invalid argument or state supplied by the caller."""


class DimensionError(ValidationError):
    """Operands have incompatible shapes."""


class ManifoldError(ValidationError):
    """Point is not on the hyperboloid / arcosh argument out of domain."""


class InsufficientPointsError(ValidationError):
    """Fewer distinct points than the operation requires."""


class DegenerateFitError(ValidationError):
    """Estimator is undefined for this input (e.g. all tail values equal)."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


class FormatError(ValueError):
    """A binary or text input file violates its declared format."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{message} (field: {field})")
        self.field = field
