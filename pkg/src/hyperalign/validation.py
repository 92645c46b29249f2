"""Input validation helpers used at every public entry point."""

import numpy as np

from .exceptions import InvalidInputError


def as_matrix(x, name="x"):
    """Coerce ``x`` to a 2-D float64 array, rejecting non-finite entries.

    Accepts plain arrays or any object carrying the matrix in an ``x``
    attribute (e.g. ``SubjectData``).
    """
    a = np.asarray(getattr(x, "x", x), dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def as_square_matrix(x, name="x"):
    a = as_matrix(x, name)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {a.shape}")
    return a


def check_same_shape(a, b, name_a="xi", name_b="xj"):
    if a.shape != b.shape:
        raise InvalidInputError(
            f"{name_a} and {name_b} must share a shape, got {a.shape} vs {b.shape}"
        )


def as_label_array(y, name="labels"):
    """Coerce ``y`` to a 1-D int64 array of class ids."""
    arr = np.asarray(getattr(y, "y", y))
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D sequence")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.asarray(arr, dtype=np.float64)
        if not np.isfinite(rounded).all() or np.any(rounded != np.round(rounded)):
            raise InvalidInputError(f"{name} must contain integer class ids")
        arr = rounded
    return arr.astype(np.int64)
