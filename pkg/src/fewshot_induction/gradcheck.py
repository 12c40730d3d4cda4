"""Finite-difference verification of reverse-mode gradients.

Checks run in float64 (see :class:`autodiff.precision`): central differences
with step 1e-3 need more headroom than float32 provides. The error measure
is ``|a - n| / (|a| + |n| + 1e-3)`` so that near-zero gradients compare by
absolute difference while large ones compare relatively.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, Trace, backward

DEFAULT_STEP = 1e-3
DEFAULT_TOLERANCE = 1e-3


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-case blended relative/absolute error between two gradient arrays."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(a - n) / (np.abs(a) + np.abs(n) + 1e-3)))


def numeric_gradient(f: Callable[[], Tensor], param: Tensor, step: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference gradient of scalar ``f()`` w.r.t. every element of ``param``.

    ``f`` must reread ``param.data`` on each call; the forward runs untraced.
    """
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f().item()
        flat[i] = orig - step
        down = f().item()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def check_gradients(f: Callable[[], Tensor], params: list[tuple[str, Tensor]],
                    step: float = DEFAULT_STEP) -> dict[str, float]:
    """Compare autodiff gradients of scalar ``f()`` against central differences.

    Returns the worst error per parameter name. Parameters not touched by
    ``f`` compare their zero autodiff grad against the (zero) numeric one.
    """
    with Trace() as trace:
        loss = f()
    backward(loss, trace)
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for name, p in params}

    errors = {}
    for name, p in params:
        numeric = numeric_gradient(f, p, step=step)
        errors[name] = relative_error(analytic[name], numeric)
    return errors
