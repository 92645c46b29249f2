"""Exception types shared across the package."""


class HyperalignError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(HyperalignError, ValueError):
    """An argument violates a documented precondition."""


class SchemaError(HyperalignError, ValueError):
    """A dataset manifest, matrix file, or labels file is structurally inconsistent."""


class DatasetIOError(HyperalignError, OSError):
    """A dataset file could not be read or written."""


class NumericalError(HyperalignError, ArithmeticError):
    """A numerical routine produced non-finite intermediate results."""
