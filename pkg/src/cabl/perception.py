"""Per-position softmax regression: the trainable map from features to concept labels."""

from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._random import stream


class NonFiniteLossError(FloatingPointError):
    pass


class SoftmaxConceptClassifier(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression trained by plain full-batch gradient descent.

    Labels are class indices ``0..n_classes-1``.  ``partial_fit`` performs
    exactly one gradient step on the batch it is given, which is what the
    abduction loop calls once per processed example; ``fit`` repeats full
    batch steps ``max_iter`` times.

    Parameters
    ----------
    n_classes : int or None
        Number of labels.  Inferred from ``y`` by ``fit`` when None.
    learning_rate : float
        Step size of each gradient step.
    max_iter : int
        Number of steps taken by ``fit``.
    init_scale : float
        Standard deviation of the Gaussian weight initialisation; 0 gives
        an all-zero model.
    random_state : int
        Seed for the weight initialisation.
    """

    def __init__(self, n_classes=None, learning_rate=0.1, max_iter=100, init_scale=0.0, random_state=0):
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.init_scale = init_scale
        self.random_state = random_state

    def initialize(self, n_features: int, n_classes: int | None = None):
        n_classes = self.n_classes if n_classes is None else n_classes
        if n_classes is None or n_classes < 2:
            raise ValueError("need at least two classes")
        if n_features < 1:
            raise ValueError("n_features must be positive")
        rng = stream(self.random_state, "init")
        self.coef_ = self.init_scale * rng.standard_normal((n_classes, n_features))
        self.intercept_ = np.zeros(n_classes)
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = n_features
        self.n_steps_ = 0
        return self

    def _check_input(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = self._check_input(X)
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X), axis=1)

    def predict(self, X) -> np.ndarray:
        # np.argmax returns the first maximum, so ties go to the lowest label index
        return np.argmax(self.decision_function(X), axis=1)

    def loss_and_grad(self, X, y):
        """Mean cross-entropy and its gradient with respect to (coef_, intercept_)."""
        check_is_fitted(self, "coef_")
        X, y = check_X_y(X, y, dtype=np.float64)
        X = self._check_input(X)
        logits = X @ self.coef_.T + self.intercept_
        logp = log_softmax(logits, axis=1)
        n = X.shape[0]
        loss = -float(logp[np.arange(n), y].mean())
        delta = np.exp(logp)
        delta[np.arange(n), y] -= 1.0
        delta /= n
        return loss, delta.T @ X, delta.sum(axis=0)

    def train_step(self, X, y) -> float:
        """One gradient step; returns the loss before the step."""
        if len(X) == 0:
            raise ValueError("empty batch")
        loss, g_coef, g_bias = self.loss_and_grad(X, y)
        if not np.isfinite(loss):
            raise NonFiniteLossError(
                f"non-finite loss {loss} after {self.n_steps_} steps "
                f"(max |coef|={np.max(np.abs(self.coef_)):.3g}, lr={self.learning_rate})"
            )
        self.coef_ -= self.learning_rate * g_coef
        self.intercept_ -= self.learning_rate * g_bias
        self.n_steps_ += 1
        self.last_loss_ = loss
        return loss

    def partial_fit(self, X, y, classes=None):
        X = np.asarray(X, dtype=np.float64)
        if not hasattr(self, "coef_"):
            n_classes = len(classes) if classes is not None else self.n_classes
            self.initialize(X.shape[1], n_classes)
        self.train_step(X, y)
        return self

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        n_classes = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        self.initialize(X.shape[1], n_classes)
        for _ in range(self.max_iter):
            self.train_step(X, y)
        return self


def eval_concept_accuracy(model, features: np.ndarray, concepts: np.ndarray, labels) -> dict:
    """Per-label recall of the argmax prediction on flattened positions.

    ``features`` has shape ``(n, m, dim)`` and ``concepts`` ``(n, m)`` with
    label indices.  Every label must occur at least once.
    """
    flat_x = features.reshape(-1, features.shape[-1])
    flat_z = concepts.reshape(-1)
    pred = model.predict(flat_x)
    out = {}
    for k, label in enumerate(labels):
        mask = flat_z == k
        total = int(mask.sum())
        if total == 0:
            raise ValueError(f"label {label!r} has no validation occurrences")
        out[label] = float((pred[mask] == k).sum()) / total
    return out
