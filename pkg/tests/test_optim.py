"""Adagrad update rule and its accumulator behavior."""

import numpy as np
import numpy.testing as npt
import pytest

from fewshot_induction import autodiff as ad
from fewshot_induction.errors import ConfigError
from fewshot_induction.optim import AdagradState, adagrad_step


def make_param(values):
    return ad.parameter(np.asarray(values, dtype=np.float32))


class TestAdagradStep:
    def test_single_step(self):
        # 1.0 - 0.1 * 4 / sqrt(16) = 0.9
        p = make_param([1.0])
        p.grad = np.array([4.0], dtype=np.float32)
        state = AdagradState([("p", p)], learning_rate=0.1, epsilon=1e-12)
        state.step()
        npt.assert_allclose(p.data, [0.9], atol=1e-6)

    def test_zero_gradient_changes_nothing(self):
        p = make_param([1.5])
        p.grad = np.zeros(1, dtype=np.float32)
        state = AdagradState([("p", p)], learning_rate=0.1)
        state.step()
        npt.assert_array_equal(p.data, [1.5])
        npt.assert_array_equal(state.accumulators["p"], [0.0])

    def test_missing_gradient_skipped(self):
        p = make_param([2.0])
        state = AdagradState([("p", p)], learning_rate=0.1)
        state.step()
        npt.assert_array_equal(p.data, [2.0])

    def test_two_successive_steps(self):
        # Frozen from the accumulator recurrence: decrements 0.1*3/3 then 0.1*4/5.
        p = make_param([1.0])
        state = AdagradState([("p", p)], learning_rate=0.1, epsilon=1e-12)
        p.grad = np.array([3.0], dtype=np.float32)
        state.step()
        npt.assert_allclose(p.data, [0.9], atol=1e-6)
        p.grad = np.array([4.0], dtype=np.float32)
        state.step()
        npt.assert_allclose(p.data, [0.82], atol=1e-6)
        npt.assert_allclose(state.accumulators["p"], [25.0], atol=1e-5)

    def test_accumulators_never_decrease(self, rng):
        p = make_param(rng.normal(size=8))
        state = AdagradState([("p", p)], learning_rate=0.05)
        previous = state.accumulators["p"].copy()
        for _ in range(20):
            p.grad = rng.normal(size=8).astype(np.float32)
            state.step()
            current = state.accumulators["p"]
            assert np.all(current >= previous)
            previous = current.copy()

    def test_step_clears_grads(self):
        p = make_param([1.0])
        p.grad = np.array([1.0], dtype=np.float32)
        state = AdagradState([("p", p)], learning_rate=0.1)
        adagrad_step(state)
        assert p.grad is None

    def test_nonpositive_learning_rate_rejected(self):
        p = make_param([1.0])
        with pytest.raises(ConfigError):
            AdagradState([("p", p)], learning_rate=0.0)
        with pytest.raises(ConfigError):
            AdagradState([("p", p)], learning_rate=-0.1)

    def test_matches_reference_recurrence(self, rng):
        p = make_param(rng.normal(size=5))
        reference = p.data.astype(np.float64).copy()
        acc = np.zeros(5)
        lr, eps = 0.03, 1e-8
        state = AdagradState([("p", p)], learning_rate=lr, epsilon=eps)
        for _ in range(10):
            g = rng.normal(size=5).astype(np.float32)
            p.grad = g.copy()
            state.step()
            g64 = g.astype(np.float64)
            acc += g64 * g64
            reference -= lr * g64 / (np.sqrt(acc) + eps)
        npt.assert_allclose(p.data, reference, atol=1e-5)
