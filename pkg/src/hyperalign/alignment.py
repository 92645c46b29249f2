"""Core alignment math.

Given two standardized response matrices, the pairwise solver whitens each
subject's voxel covariance, builds a cross-covariance between the two
subjects (plain same-time-point products in classical mode, class-pooled
within/between combinations in supervised mode), and reads the aligning maps
off the SVD of the whitened cross term.
"""

from dataclasses import dataclass, replace

import numpy as np

from .data import standardize
from .exceptions import InvalidInputError, NumericalError
from .linalg import inv_sqrt_psd, svd
from .validation import as_matrix, check_same_shape

SOLVER_MODES = ("classical", "ldha")


def isc(xi, xj):
    """Inter-subject correlation: the mean per-column product of two matrices.

    Equals ``tr(xi.T @ xj) / V`` and lies in ``[-1, 1]`` when both inputs
    are column-standardized. Symmetric in its arguments.
    """
    a = as_matrix(xi, "xi")
    b = as_matrix(xj, "xj")
    check_same_shape(a, b)
    return float(np.sum(a * b) / a.shape[1])


def mean_pairwise_isc(mats, standardize_first=True):
    """Mean ISC over all unordered pairs, standardizing each matrix first.

    Mapped data generally loses unit column norms, so re-standardizing keeps
    the metric on the ``[-1, 1]`` scale where self-correlation is 1.
    """
    ms = [as_matrix(m, f"mats[{i}]") for i, m in enumerate(mats)]
    if len(ms) < 2:
        raise InvalidInputError("need at least two matrices")
    if standardize_first:
        ms = [standardize(m) for m in ms]
    total, count = 0.0, 0
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            total += isc(ms[i], ms[j])
            count += 1
    return total / count


@dataclass(frozen=True)
class NeighborhoodMatrix:
    """Binary ``T x T`` same-class indicator with its nonzero count.

    ``mask[m, n]`` is 1 exactly when time points ``m`` and ``n`` carry the
    same class label; the diagonal is all ones (a stimulus shares its own
    class), so all-distinct labels reduce the mask to the identity and the
    classical same-time-point pairing.
    """

    mask: np.ndarray
    nonzero_count: int

    @property
    def t(self):
        return self.mask.shape[0]


def build_neighborhood(labels) -> NeighborhoodMatrix:
    """Same-class indicator matrix from a label vector."""
    y = np.asarray(getattr(labels, "y", labels), dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise InvalidInputError("labels must be a non-empty 1-D sequence")
    mask = (y[:, None] == y[None, :]).astype(np.float64)
    return NeighborhoodMatrix(mask, int(round(mask.sum())))


def _cross_parts(a, b, mask):
    """Within-class and between-class cross products, un-symmetrized.

    ``m = a.T @ mask @ b`` pairs same-class rows; the complementary pairing
    through ``1 - mask`` is expanded as a column-sum outer product minus
    ``m`` rather than forming the dense complement (the all-ones pairing is
    rank one).
    """
    m = a.T @ (mask @ b)
    n = np.outer(a.sum(axis=0), b.sum(axis=0)) - m
    return m, n


def _mode_cross(a, b, neighborhood, cfg):
    """Cross term between two matrices per the configured solver mode."""
    if cfg.mode != "ldha":
        return a.T @ b
    t = a.shape[0]
    if neighborhood is None:
        raise InvalidInputError("ldha mode requires a neighborhood matrix")
    if neighborhood.t != t:
        raise InvalidInputError(
            f"neighborhood is {neighborhood.t}x{neighborhood.t}, data has t={t}"
        )
    weight = cfg.between_weight
    if weight is None:
        weight = neighborhood.nonzero_count / t**2
    m, n = _cross_parts(a, b, neighborhood.mask)
    return m - weight * n


@dataclass(frozen=True)
class PairCovariances:
    """Symmetrized within/between-class covariances of one subject pair.

    ``discriminant`` is ``within - weight * between`` with
    ``weight = nonzero_count / T**2``.
    """

    within: np.ndarray
    between: np.ndarray
    discriminant: np.ndarray


def pair_covariances(xi, xj, neighborhood: NeighborhoodMatrix) -> PairCovariances:
    """Within- and between-class covariance matrices for a subject pair.

    Both matrices are two-term symmetrized sums over all row pairs; the
    between-class part is computed via the rank-one shortcut (column-sum
    outer product minus the within cross term) rather than the quartic loop.
    """
    a = as_matrix(xi, "xi")
    b = as_matrix(xj, "xj")
    check_same_shape(a, b)
    t = a.shape[0]
    if neighborhood.t != t:
        raise InvalidInputError(
            f"neighborhood is {neighborhood.t}x{neighborhood.t}, data has t={t}"
        )
    m, n = _cross_parts(a, b, neighborhood.mask)
    within = m + m.T
    between = n + n.T
    weight = neighborhood.nonzero_count / t**2
    return PairCovariances(within, between, within - weight * between)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the pairwise solver.

    ``mode`` selects the cross term: plain same-time products ("classical")
    or the supervised within/between combination ("ldha"). ``ridge`` and
    ``floor`` regularize the whitening of the rank-deficient voxel
    covariances. ``k`` is the number of retained components (defaults to
    ``min(T, V)``). ``between_weight`` overrides the between-class weight,
    which otherwise is the neighborhood nonzero count over ``T**2``; forcing
    it to 0 drops the between-class term entirely.
    """

    mode: str = "classical"
    ridge: float = 0.0
    floor: float = 1e-10
    k: int | None = None
    between_weight: float | None = None

    def __post_init__(self):
        if self.mode not in SOLVER_MODES:
            raise InvalidInputError(
                f"mode must be one of {SOLVER_MODES}, got {self.mode!r}"
            )
        if self.ridge < 0.0:
            raise InvalidInputError("ridge must be non-negative")
        if self.floor <= 0.0:
            raise InvalidInputError("floor must be positive")
        if self.k is not None and self.k < 1:
            raise InvalidInputError("k must be at least 1")

    def resolve_k(self, t, v):
        limit = min(t, v)
        k = limit if self.k is None else self.k
        if k > limit:
            raise InvalidInputError(f"k={k} exceeds min(T, V)={limit}")
        return k

    def with_k(self, k) -> "SolverConfig":
        return replace(self, k=k)


@dataclass(frozen=True)
class AlignmentMap:
    """One subject's ``V x k`` mapping into the shared space."""

    r: np.ndarray
    k: int
    ridge: float
    floor: float
    canonical_corrs: np.ndarray

    def apply(self, x):
        return as_matrix(x, "x") @ self.r


def solve_pair(xi, xj, neighborhood=None, cfg=None):
    """Aligning maps for a pair of standardized response matrices.

    The voxel covariances of both sides are whitened with the regularized
    inverse square root, the (mode-dependent) cross term is whitened from
    both sides, and its SVD yields the two maps; the retained singular
    values are the canonical correlations.

    In supervised mode the cross term is ``m - w * n`` where ``m`` pools
    same-class row pairs, ``n`` pools cross-class pairs, and ``w`` is the
    between-class weight. With an identity neighborhood and ``w = 0`` this
    is exactly the classical cross term, so the supervised solver degrades
    gracefully to classical CCA.

    Returns a pair of ``AlignmentMap``: first for ``xi``, second for ``xj``.
    """
    cfg = cfg or SolverConfig()
    a = as_matrix(xi, "xi")
    b = as_matrix(xj, "xj")
    if a.shape[0] != b.shape[0]:
        raise InvalidInputError(
            f"xi and xj must share T, got {a.shape[0]} vs {b.shape[0]}"
        )
    t = a.shape[0]
    k = cfg.resolve_k(t, min(a.shape[1], b.shape[1]))
    cross = _mode_cross(a, b, neighborhood, cfg)
    whiten_i = inv_sqrt_psd(a.T @ a, cfg.ridge, cfg.floor)
    whiten_j = inv_sqrt_psd(b.T @ b, cfg.ridge, cfg.floor)
    h = whiten_i @ cross @ whiten_j
    if not np.isfinite(h).all():
        raise NumericalError("whitened cross term has non-finite entries")
    u, s, vt = svd(h)
    corrs = s[:k].copy()
    map_i = AlignmentMap(whiten_i @ u[:, :k], k, cfg.ridge, cfg.floor, corrs)
    map_j = AlignmentMap(whiten_j @ vt[:k].T, k, cfg.ridge, cfg.floor, corrs)
    return map_i, map_j


def solve_to_target(x, target, neighborhood=None, cfg=None) -> AlignmentMap:
    """Map one subject onto a fixed target matrix.

    Unlike :func:`solve_pair`, the target keeps its own coordinates: the map
    minimizes the distance between the mapped subject and the target under
    the whitening constraint (the polar factor of the half-whitened cross
    term), so mapped data from different subjects solved against a common
    target share one frame. The map width equals the target's column count.

    Supervision enters exactly as in :func:`solve_pair`: in "ldha" mode the
    cross term pools same-class row pairs and down-weights cross-class ones.
    """
    cfg = cfg or SolverConfig()
    a = as_matrix(x, "x")
    g = as_matrix(target, "target")
    t = a.shape[0]
    if g.shape[0] != t:
        raise InvalidInputError(
            f"subject and target must share T, got {t} vs {g.shape[0]}"
        )
    k = g.shape[1]
    if k > min(t, a.shape[1]):
        raise InvalidInputError(
            f"target width {k} exceeds min(T, V) = {min(t, a.shape[1])}"
        )
    cross = _mode_cross(a, g, neighborhood, cfg)
    whiten = inv_sqrt_psd(a.T @ a, cfg.ridge, cfg.floor)
    half = whiten @ cross
    if not np.isfinite(half).all():
        raise NumericalError("whitened cross term has non-finite entries")
    u, s, vt = svd(half)
    return AlignmentMap(whiten @ (u @ vt), k, cfg.ridge, cfg.floor, s.copy())
