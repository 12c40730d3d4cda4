"""Adagrad with per-parameter accumulators.

Update rule per element: ``accum += g**2`` then
``param -= lr * g / (sqrt(accum) + epsilon)``. Accumulators never decrease,
so effective step sizes shrink over training.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import ConfigError, DimensionError


class AdagradState:
    """Optimizer state over a fixed set of named parameters."""

    def __init__(self, params: list[tuple[str, Tensor]], learning_rate: float = 0.01,
                 epsilon: float = 1e-8):
        if learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {learning_rate}")
        if epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {epsilon}")
        self.learning_rate = float(learning_rate)
        self.epsilon = float(epsilon)
        self.params = list(params)
        self.accumulators = {name: np.zeros_like(p.data) for name, p in self.params}

    def step(self) -> None:
        """Apply one update from the parameters' current grads, then clear them.

        Parameters whose grad is ``None`` are skipped: value and accumulator
        stay untouched, same as an explicit zero gradient.
        """
        for name, p in self.params:
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise DimensionError(f"grad shape {g.shape} does not match param {name} {p.data.shape}")
            acc = self.accumulators[name]
            acc += g * g
            p.data -= self.learning_rate * g / (np.sqrt(acc) + self.epsilon)
            p.grad = None


def adagrad_step(state: AdagradState) -> None:
    """Functional alias for :meth:`AdagradState.step`."""
    state.step()
