import numpy as np

from hyperalign import standardize


def standardized_matrix(rng, t, v):
    """Random column-standardized matrix."""
    return standardize(rng.standard_normal((t, v)))


def loop_pair_covariances(xi, xj, mask):
    """Literal quadruple-loop transcription of the two-term covariance sums.

    Test oracle only; the package computes the same matrices in closed form.
    """
    t, v = xi.shape
    w = np.zeros((v, v))
    b = np.zeros((v, v))
    for m in range(v):
        for n in range(v):
            for l in range(t):
                for k in range(t):
                    same = mask[l, k]
                    w[m, n] += same * xi[l, m] * xj[k, n] + same * xi[l, n] * xj[k, m]
                    diff = 1.0 - same
                    b[m, n] += diff * xi[l, m] * xj[k, n] + diff * xi[l, n] * xj[k, m]
    return w, b
