"""Training objectives: reconstruction, supervised contrastive, logistic."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor

# additive mask that removes self-similarity from the contrastive softmax
_SELF_MASK = 1e12


def squared_error(pred, target) -> Tensor:
    """Sum over rows of ``|pred - target|^2``."""
    diff = ag.as_tensor(pred) - ag.as_tensor(target)
    return (diff * diff).sum()


def supervised_contrastive_loss(features, labels, temperature: float = 0.1) -> Tensor:
    """Supervised contrastive loss summed over anchors.

    Rows of ``features`` are l2-normalized. For anchor ``i`` with positives
    ``P(i)`` (same label, not ``i``) the term is
    ``-1/|P(i)| sum_p log softmax_{a != i}(z_i . z_a / T)[p]``; anchors without
    positives are skipped.
    """
    f = ag.as_tensor(features)
    labels = np.asarray(labels)
    n = f.shape[0]
    if n < 2 or len(labels) != n:
        raise ValueError("need at least two labelled embeddings")
    same = (labels[:, None] == labels[None, :]) & ~np.eye(n, dtype=bool)
    counts = same.sum(axis=1)
    if counts.sum() == 0:
        raise ValueError("no positive pairs: every label is distinct")
    z = f / ag.rownorm(f)
    logits = (z @ z.T) / temperature - _SELF_MASK * np.eye(n)
    log_prob = logits - ag.logsumexp(logits, axis=1)
    weights = np.where(counts[:, None] > 0, same / np.maximum(counts, 1)[:, None], 0.0)
    return -(log_prob * weights).sum()


def supcon_with_grad(features: np.ndarray, labels, temperature: float = 0.1):
    """Numpy convenience wrapper: ``(loss, d loss / d features)``."""
    f = ag.parameter(features)
    loss = supervised_contrastive_loss(f, labels, temperature)
    loss.backward()
    return float(loss.data), f.grad


def _log1pexp(s: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, s)


def logistic_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 1e-4):
    """Mean binary cross-entropy of ``sigmoid(X w[:-1] + w[-1])`` plus ``l2/2 |w[:-1]|^2``.

    Returns ``(loss, gradient, hessian)``; the intercept is not penalized.
    """
    s = X @ w[:-1] + w[-1]
    n = len(y)
    loss = np.mean(_log1pexp(s) - y * s) + 0.5 * l2 * w[:-1] @ w[:-1]
    p = 0.5 * (1 + np.tanh(0.5 * s))
    r = (p - y) / n
    grad = np.concatenate([X.T @ r + l2 * w[:-1], [r.sum()]])
    Xb = np.hstack([X, np.ones((n, 1))])
    H = (Xb * (p * (1 - p) / n)[:, None]).T @ Xb
    H[:-1, :-1] += l2 * np.eye(X.shape[1])
    return float(loss), grad, H
