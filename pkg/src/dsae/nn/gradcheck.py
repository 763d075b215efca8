"""Central finite-difference audit of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autograd import Tensor


def numerical_grad(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``f`` w.r.t. every entry of ``x`` (perturbed in place)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        grad[i] = (fp - fm) / (2 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


def check_gradients(loss_fn: Callable[[], Tensor], params: dict[str, Tensor],
                    h: float = 1e-5) -> dict[str, float]:
    """Compare tape gradients of ``loss_fn()`` with finite differences.

    ``loss_fn`` must rebuild the graph from the current ``params`` on every
    call. Returns the norm-wise relative error per parameter.
    """
    for p in params.values():
        p.grad = None
    loss_fn().backward()
    analytic = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for k, p in params.items()}

    def value() -> float:
        return float(loss_fn().data)

    return {k: relative_error(analytic[k], numerical_grad(value, p.data, h))
            for k, p in params.items()}
