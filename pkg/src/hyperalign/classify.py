"""Built-in linear classifier and ranking metrics for the MVP pipeline.

The classifier is a deterministic closed-form stand-in for the margin
classifiers common in MVP studies: one ridge regression per class against
+/-1 targets, predictions by argmax score. It keeps the evaluation pipeline
dependency-light and exactly reproducible.
"""

import logging

import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator

from .exceptions import InvalidInputError
from .validation import as_label_array, as_matrix

logger = logging.getLogger("hyperalign")


class RidgeOneVsRest(BaseEstimator):
    """One-vs-rest ridge-regression classifier.

    For each class ``c`` solves ``(F.T F + penalty I) w = F.T t`` on the
    bias-augmented feature matrix with targets ``+1`` for class ``c`` and
    ``-1`` otherwise. Ties in the argmax break toward the lowest class id.

    Attributes
    ----------
    weights_ : (k, C) ndarray
    bias_ : (C,) ndarray
    num_classes_ : int
    """

    def __init__(self, penalty=1.0):
        self.penalty = penalty

    def fit(self, X, y, num_classes=None):
        f = as_matrix(X, "X")
        labels = as_label_array(y)
        if labels.shape[0] != f.shape[0]:
            raise InvalidInputError("X and y must have the same number of rows")
        if num_classes is None:
            num_classes = int(labels.max()) + 1
        if np.unique(labels).size < 2:
            raise InvalidInputError("training needs at least two classes present")
        aug = np.hstack([f, np.ones((f.shape[0], 1))])
        gram = aug.T @ aug + self.penalty * np.eye(aug.shape[1])
        targets = np.where(labels[:, None] == np.arange(num_classes), 1.0, -1.0)
        coef = np.linalg.solve(gram, aug.T @ targets)
        self.weights_ = coef[:-1]
        self.bias_ = coef[-1]
        self.num_classes_ = num_classes
        return self

    def decision_function(self, X):
        f = as_matrix(X, "X")
        if f.shape[1] != self.weights_.shape[0]:
            raise InvalidInputError(
                f"feature width {f.shape[1]} does not match model "
                f"width {self.weights_.shape[0]}"
            )
        return f @ self.weights_ + self.bias_

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


def accuracy_pct(y_true, y_pred):
    """Fraction of exact label matches, in percent."""
    t = as_label_array(y_true, "y_true")
    p = as_label_array(y_pred, "y_pred")
    if t.shape != p.shape:
        raise InvalidInputError("y_true and y_pred must have the same length")
    return 100.0 * float(np.mean(t == p))


def _rank_auc(scores, positive):
    """Mann-Whitney AUC with half credit for score ties, in [0, 1]."""
    ranks = rankdata(scores)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_macro_pct(scores, y_true, num_classes=None):
    """Macro one-vs-rest AUC in percent.

    Each class is scored by ranking its column of ``scores`` against the
    binarized labels; classes with no positive or no negative examples are
    skipped (and logged). Raises when no class is scorable.
    """
    s = as_matrix(scores, "scores")
    labels = as_label_array(y_true, "y_true")
    if labels.shape[0] != s.shape[0]:
        raise InvalidInputError("scores and y_true must have the same length")
    if num_classes is None:
        num_classes = s.shape[1]
    if num_classes > s.shape[1]:
        raise InvalidInputError(
            f"scores have {s.shape[1]} columns, need {num_classes}"
        )
    per_class = []
    skipped = []
    for c in range(num_classes):
        positive = labels == c
        if positive.all() or not positive.any():
            skipped.append(c)
            continue
        per_class.append(_rank_auc(s[:, c], positive))
    if skipped:
        logger.warning("auc_macro_pct skipped one-sided classes: %s", skipped)
    if not per_class:
        raise InvalidInputError("no class has both positive and negative examples")
    return 100.0 * float(np.mean(per_class))
