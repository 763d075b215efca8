"""Poincare-ball operations at the origin for curvature ``-c``.

Points are the last axis of numpy arrays, so every function works on a
single vector or a batch of row vectors. All ball-valued outputs are
projected to norm ``(1 - BALL_EPS) / sqrt(c)``.
"""

from __future__ import annotations

import numpy as np

BALL_EPS = 1e-5
MIN_NORM = 1e-15


def _norm(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), MIN_NORM)


def _check_c(c: float) -> float:
    if not c > 0:
        raise ValueError(f"curvature magnitude c must be positive, got {c}")
    return float(c)


def max_norm(c: float) -> float:
    return (1.0 - BALL_EPS) / np.sqrt(c)


def project(x, c: float) -> np.ndarray:
    """Pull points with norm above ``max_norm(c)`` back onto that sphere."""
    x = np.asarray(x, dtype=float)
    n = _norm(x)
    limit = max_norm(_check_c(c))
    return np.where(n > limit, x / n * limit, x)


def exp0(v, c: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    sc = np.sqrt(_check_c(c))
    n = _norm(v)
    return project(np.tanh(sc * n) * v / (sc * n), c)


def log0(y, c: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    sc = np.sqrt(_check_c(c))
    n = _norm(y)
    if np.any(sc * n >= 1.0):
        raise ValueError("point lies on or outside the Poincare ball")
    return np.arctanh(sc * n) * y / (sc * n)


def mobius_add(x, y, c: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = _check_c(c)
    xy = np.sum(x * y, axis=-1, keepdims=True)
    x2 = np.sum(x * x, axis=-1, keepdims=True)
    y2 = np.sum(y * y, axis=-1, keepdims=True)
    num = (1 + 2 * c * xy + c * y2) * x + (1 - c * x2) * y
    den = 1 + 2 * c * xy + c * c * x2 * y2
    return project(num / np.maximum(den, MIN_NORM), c)


def mobius_matvec(W, x, c: float) -> np.ndarray:
    """``W (x) x = exp0(W log0(x))`` for an ``m x d`` matrix ``W``.

    Batches of points are rows of ``x``; the product is ``log0(x) @ W.T``.
    """
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    if W.ndim != 2 or W.shape[1] != x.shape[-1]:
        raise ValueError(f"cannot multiply {W.shape} matrix with {x.shape[-1]}-vectors")
    return exp0(log0(x, c) @ W.T, c)


def poincare_dist(x, y, c: float) -> np.ndarray:
    """Geodesic distance ``(2/sqrt(c)) artanh(sqrt(c) |(-x) + y|)``."""
    sc = np.sqrt(_check_c(c))
    diff = mobius_add(-np.asarray(x, dtype=float), y, c)
    return 2.0 / sc * np.arctanh(np.minimum(sc * np.linalg.norm(diff, axis=-1), 1 - MIN_NORM))


def pairwise_poincare_dist(X, c: float) -> np.ndarray:
    """All-pairs distance matrix for the rows of ``X``.

    Uses the closed form ``arcosh(1 + 2c|x-y|^2 / ((1-c|x|^2)(1-c|y|^2))) / sqrt(c)``,
    which agrees with :func:`poincare_dist`.
    """
    X = np.asarray(X, dtype=float)
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    conf = (1 - c * sq)[:, None] * (1 - c * sq)[None, :]
    D = np.arccosh(1 + 2 * c * d2 / conf) / np.sqrt(c)
    np.fill_diagonal(D, 0.0)
    return D
