"""Intrinsic-dimension class weights and a weighted softmax classifier.

Classes of higher intrinsic dimension are harder to learn, so their
cross-entropy terms are up-weighted with

    omega_l = L * d_l / sum_l' d_l'

which sums to ``L`` and reduces to the standard cross entropy when all
estimates agree. The classifier is multinomial logistic regression
trained by mini-batch gradient descent on

    loss = mean_i  omega_{y_i} * (-log softmax(x_i W + b)_{y_i}).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from .blob import pack_arrays, read_blob, unpack_arrays, write_blob
from .config import SoftmaxConfig
from .errors import ArgumentError, ModelLoadError, TrainingError
from .rng import make_rng
from .state import read_json, write_json

logger = logging.getLogger(__name__)


@dataclass
class ClassWeights:
    """Per-class weights ``omega`` and the estimates they came from."""

    d_hats: np.ndarray
    omega: np.ndarray

    @property
    def L(self) -> int:
        return int(self.omega.shape[0])


def id_weights(d_hats: Sequence[float]) -> ClassWeights:
    """``omega_l = L * d_l / sum(d)``; every estimate must be positive."""
    d = np.asarray(d_hats, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ArgumentError("need a non-empty vector of estimates")
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise ArgumentError(f"every estimate must be positive and finite, got {d.tolist()}")
    return ClassWeights(d_hats=d, omega=d.size * d / d.sum())


def write_weights_csv(weights: ClassWeights, path: str) -> None:
    """Write ``class, d_hat, omega`` rows."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["class", "d_hat", "omega"])
        for c, (d, w) in enumerate(zip(weights.d_hats.tolist(), weights.omega.tolist())):
            writer.writerow([c, repr(d), repr(w)])


@dataclass
class SoftmaxClassifier:
    """Linear softmax classifier ``argmax(x W + b)``."""

    W: np.ndarray
    b: np.ndarray
    losses: List[float] = field(default_factory=list)

    @property
    def D(self) -> int:
        return int(self.W.shape[0])

    @property
    def L(self) -> int:
        return int(self.W.shape[1])

    def logits(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.W + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)


def weighted_cross_entropy(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, omega: Optional[np.ndarray] = None
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Batch-mean weighted cross entropy and its gradients for ``W`` and ``b``.

    The gradient with respect to the logits of sample ``i`` is
    ``omega_{y_i} * (softmax_i - onehot_i) / B``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    B, L = X.shape[0], W.shape[1]
    if omega is None:
        omega = np.ones(L)
    logp = log_softmax(X @ W + b, axis=1)
    rows = np.arange(B)
    w = np.asarray(omega, dtype=np.float64)[y]
    loss = float(np.sum(w * -logp[rows, y]) / B)
    delta = np.exp(logp)
    delta[rows, y] -= 1.0
    delta *= (w / B)[:, None]
    return loss, {"W": X.T @ delta, "b": delta.sum(axis=0)}


def _check_labels(labels: np.ndarray, L: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= L):
        raise ArgumentError(f"labels must lie in [0, {L}), got range [{labels.min()}, {labels.max()}]")


def train_softmax_weighted(
    X: np.ndarray,
    labels: Sequence[int],
    omega: Optional[ClassWeights] = None,
    cfg: Optional[SoftmaxConfig] = None,
    n_classes: Optional[int] = None,
) -> SoftmaxClassifier:
    """Train multinomial logistic regression on the (weighted) cross entropy.

    ``omega=None`` is the standard cross entropy. Deterministic given
    ``cfg.seed``.

    Raises
    ------
    TrainingError
        The loss became non-finite; the message names the epoch.
    """
    cfg = cfg or SoftmaxConfig()
    cfg.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ArgumentError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    L = omega.L if omega is not None else (n_classes or int(y.max()) + 1)
    _check_labels(y, L)
    weights = np.ones(L) if omega is None else omega.omega
    rng = make_rng(cfg.seed)
    clf = SoftmaxClassifier(W=0.01 * rng.standard_normal((X.shape[1], L)), b=np.zeros(L))
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            loss, grads = weighted_cross_entropy(clf.W, clf.b, X[rows], y[rows], weights)
            if not math.isfinite(loss):
                raise TrainingError(f"classifier loss became non-finite at epoch {epoch}")
            clf.W -= cfg.learning_rate * grads["W"]
            clf.b -= cfg.learning_rate * grads["b"]
            total += loss * rows.size
        clf.losses.append(total / n)
    if clf.losses:
        logger.debug("softmax: %d epochs, final loss %.6g", cfg.epochs, clf.losses[-1])
    return clf


def per_class_accuracy(
    clf: SoftmaxClassifier, X: np.ndarray, labels: Sequence[int], n_classes: Optional[int] = None
) -> np.ndarray:
    """Fraction of each class predicted correctly; ``nan`` marks a class absent from ``labels``."""
    y = np.asarray(labels, dtype=np.int64)
    L = n_classes or clf.L
    _check_labels(y, L)
    correct = clf.predict(X) == y
    out = np.full(L, np.nan)
    for c in range(L):
        members = y == c
        if members.any():
            out[c] = float(correct[members].mean())
    return out


def save_classifier(clf: SoftmaxClassifier, path: str, dtype: str = "f64") -> None:
    """Write the classifier blob to ``path`` and its manifest to ``path + '.json'``."""
    layout, payload = pack_arrays({"W": clf.W, "b": clf.b}, dtype)
    write_blob(path, payload)
    write_json(path + ".json", {"classifier": {"D": clf.D, "L": clf.L, "losses": clf.losses}, "layout": layout})


def load_classifier(path: str) -> SoftmaxClassifier:
    try:
        manifest = read_json(path + ".json")
    except OSError as exc:
        raise ModelLoadError(f"cannot read classifier manifest {path}.json: {exc}") from exc
    arrays = unpack_arrays(manifest["layout"], read_blob(path))
    return SoftmaxClassifier(W=arrays["W"], b=arrays["b"], losses=list(manifest["classifier"].get("losses", [])))
