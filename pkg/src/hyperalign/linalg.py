"""Dense numerical kernels: symmetric eigendecomposition, SVD, and the
regularized inverse square root of a symmetric PSD matrix.

Everything runs in float64. Inputs that are symmetric by contract are
symmetrized by averaging before factorization, and eigenvector / singular
vector signs follow a fixed convention (the largest-magnitude entry of each
vector is made positive) so repeated runs are bit-identical.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import InvalidInputError
from .validation import as_matrix, as_square_matrix


class SvdResult(NamedTuple):
    """Thin SVD ``a == u @ diag(s) @ vt`` with ``s`` non-increasing."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def symmetrize(a):
    """Average a square matrix with its transpose."""
    m = as_square_matrix(a, "a")
    return (m + m.T) / 2.0


def _sign_fix(columns):
    """Signs that make the largest-magnitude entry of each column positive."""
    idx = np.argmax(np.abs(columns), axis=0)
    picked = columns[idx, np.arange(columns.shape[1])]
    return np.where(picked < 0.0, -1.0, 1.0)


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric matrix (symmetrized by averaging before factorization).

    Returns
    -------
    eigenvalues : (n,) ndarray, sorted non-increasing.
    eigenvectors : (n, n) ndarray with orthonormal columns, column ``i``
        paired with ``eigenvalues[i]``, signs fixed deterministically.
    """
    m = symmetrize(a)
    w, v = np.linalg.eigh(m)
    w = w[::-1].copy()
    v = np.ascontiguousarray(v[:, ::-1])
    return w, v * _sign_fix(v)


def inv_sqrt_psd(a, ridge=0.0, floor=1e-10):
    """Regularized inverse square root of a symmetric PSD matrix.

    Eigenvalues are shifted by ``ridge`` and clamped from below at ``floor``
    before the -1/2 power, which keeps the result bounded for rank-deficient
    input: ``V diag((max(w + ridge, floor))^(-1/2)) V^T``.
    """
    if ridge < 0.0:
        raise InvalidInputError("ridge must be non-negative")
    if floor <= 0.0:
        raise InvalidInputError("floor must be positive")
    w, v = sym_eig(a)
    scale = 1.0 / np.sqrt(np.maximum(w + ridge, floor))
    m = (v * scale) @ v.T
    return (m + m.T) / 2.0


def svd(a):
    """Thin SVD with deterministic signs.

    The largest-magnitude entry of each left singular vector is made
    positive; rows of ``vt`` are flipped to match so the product is
    unchanged.
    """
    m = as_matrix(a, "a")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    signs = _sign_fix(u)
    return SvdResult(u * signs, s, vt * signs[:, None])
