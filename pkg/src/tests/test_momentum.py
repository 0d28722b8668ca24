"""
Tests for local SGD / SGDM and the reversed momentum estimate.
"""

import unittest

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from fedmom.errors import LengthMismatchError, MomentumNotReadyError, NonFiniteGradientError
from fedmom.optim.momentum import (
    MomentumScheme,
    MomentumState,
    OptimizerConfig,
    apply_step,
    final_momentum,
    reset,
)

BETAS = [0.0, 0.5, 0.9, 0.99]


def run_steps(grads, v0, cfg):
    """Apply every gradient in order from zero parameters; return all states."""
    state = reset(MomentumState.zeros(v0.size), v0)
    params = np.zeros(v0.size)
    states = []
    for g in grads:
        params, state = apply_step(state, params, g, cfg)
        states.append(state)
    return params, states


def reversed_direct(grads, v0, beta, t):
    """(1-beta) v0 + (1-beta) sum_{i<t} beta^i g_i + beta^t g_t."""
    coeffs = (1.0 - beta) * beta ** np.arange(t)
    return (1.0 - beta) * v0 + coeffs @ grads[:t] + beta ** t * grads[t]


class TestOptimizerConfig(unittest.TestCase):
    """Tests for OptimizerConfig validation."""

    def test_defaults(self):
        cfg = OptimizerConfig(learning_rate=0.1)
        self.assertEqual(cfg.beta, 0.9)
        self.assertEqual(cfg.scheme, MomentumScheme.STANDARD)
        self.assertFalse(cfg.reversed_descent)

    def test_rejects_bad_values(self):
        with self.assertRaises(ValidationError):
            OptimizerConfig(learning_rate=0.0)
        with self.assertRaises(ValidationError):
            OptimizerConfig(learning_rate=0.1, beta=1.0)
        with self.assertRaises(ValidationError):
            OptimizerConfig(learning_rate=0.1, momentum=0.9)


class TestReversedEstimate(unittest.TestCase):
    """Tests for the reversed exponential-decay momentum."""

    def test_matches_direct_formula(self):
        """1000 random sequences, every prefix, inf-norm error below 1e-10."""
        rng = np.random.default_rng(2024)
        for trial in range(1000):
            beta = BETAS[trial % len(BETAS)]
            length = int(rng.integers(1, 51))
            grads = rng.standard_normal((length, 5))
            v0 = rng.standard_normal(5)
            cfg = OptimizerConfig(learning_rate=0.1, beta=beta, scheme=MomentumScheme.REVERSED)
            _, states = run_steps(grads, v0, cfg)
            for t, state in enumerate(states):
                expected = reversed_direct(grads, v0, beta, t)
                self.assertLess(np.abs(state.r - expected).max(), 1e-10, (trial, t))

    def test_first_step(self):
        """r after one step is (1-beta) v0 + g0."""
        v0, g0 = np.array([2.0, -1.0]), np.array([0.5, 0.5])
        cfg = OptimizerConfig(learning_rate=0.1, beta=0.9, scheme=MomentumScheme.REVERSED)
        _, states = run_steps([g0], v0, cfg)
        np.testing.assert_allclose(states[0].r, 0.1 * v0 + g0)

    @given(beta=st.sampled_from(BETAS), c=st.floats(-10, 10, allow_nan=False), steps=st.integers(1, 40))
    def test_constant_gradient_coefficients_sum(self, beta, c, steps):
        """Constant c with v0 = c gives r = (2 - beta) c at every step."""
        grads = np.full((steps, 3), c)
        cfg = OptimizerConfig(learning_rate=0.01, beta=beta, scheme=MomentumScheme.REVERSED)
        _, states = run_steps(grads, np.full(3, c), cfg)
        for state in states:
            np.testing.assert_allclose(state.r, (2.0 - beta) * c, rtol=0, atol=1e-12 * max(1.0, abs(c)))

    def test_early_gradients_weigh_more(self):
        """With beta=0.5 the first of two unit gradients carries the larger weight."""
        e0, e1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        cfg = OptimizerConfig(learning_rate=0.1, beta=0.5, scheme=MomentumScheme.REVERSED)
        _, states = run_steps([e0, e1], np.zeros(2), cfg)
        np.testing.assert_allclose(states[-1].r, [0.5, 0.5])
        _, states = run_steps([e0, e1, np.zeros(2)], np.zeros(2), cfg)
        np.testing.assert_allclose(states[-1].r, [0.5, 0.25])

    def test_transmits_r_descends_along_v(self):
        v0 = np.array([1.0, 1.0])
        g = np.array([0.2, -0.4])
        cfg = OptimizerConfig(learning_rate=0.5, beta=0.9, scheme=MomentumScheme.REVERSED)
        params, states = run_steps([g], v0, cfg)
        np.testing.assert_allclose(params, -0.5 * (0.9 * v0 + g))
        np.testing.assert_array_equal(final_momentum(states[-1], cfg), states[-1].r)

    def test_reversed_descent_flag(self):
        v0 = np.array([1.0, 1.0])
        g = np.array([0.2, -0.4])
        cfg = OptimizerConfig(
            learning_rate=0.5, beta=0.9, scheme=MomentumScheme.REVERSED, reversed_descent=True
        )
        params, _ = run_steps([g], v0, cfg)
        np.testing.assert_allclose(params, -0.5 * (0.1 * v0 + g))


class TestStandardMomentum(unittest.TestCase):
    """Tests for SGDM and plain SGD."""

    @given(beta=st.sampled_from(BETAS), steps=st.integers(1, 30), seed=st.integers(0, 1000))
    def test_closed_form(self, beta, steps, seed):
        """v_T = beta^T v0 + sum_i beta^(T-1-i) g_i."""
        rng = np.random.default_rng(seed)
        grads = rng.standard_normal((steps, 4))
        v0 = rng.standard_normal(4)
        cfg = OptimizerConfig(learning_rate=0.1, beta=beta)
        _, states = run_steps(grads, v0, cfg)
        expected = beta ** steps * v0 + (beta ** np.arange(steps - 1, -1, -1)) @ grads
        self.assertLess(np.abs(states[-1].v - expected).max(), 1e-10)
        np.testing.assert_array_equal(final_momentum(states[-1], cfg), states[-1].v)

    def test_single_step_from_zero(self):
        """Zero start momentum: one SGDM step is lr * g."""
        g = np.array([1.0, -2.0, 3.0])
        cfg = OptimizerConfig(learning_rate=0.1, beta=0.9)
        params, states = run_steps([g], np.zeros(3), cfg)
        np.testing.assert_allclose(params, -0.1 * g)
        np.testing.assert_array_equal(states[0].v, g)

    def test_plain_sgd(self):
        g = np.array([1.0, -2.0])
        cfg = OptimizerConfig(learning_rate=0.25, scheme=MomentumScheme.NONE)
        params, states = run_steps([g, g], np.array([5.0, 5.0]), cfg)
        np.testing.assert_array_equal(params, -0.5 * g)
        np.testing.assert_array_equal(final_momentum(states[-1], cfg), np.zeros(2))
        self.assertEqual(states[-1].step, 2)

    def test_states_are_not_mutated(self):
        cfg = OptimizerConfig(learning_rate=0.1)
        v_init = np.ones(2)
        start = reset(MomentumState.zeros(2), v_init)
        v_init[:] = 7.0
        np.testing.assert_array_equal(start.v, 1.0)
        apply_step(start, np.zeros(2), np.ones(2), cfg)
        np.testing.assert_array_equal(start.v, 1.0)
        self.assertEqual(start.step, 0)


class TestMomentumErrors(unittest.TestCase):
    """Tests for optimizer error paths."""

    def setUp(self):
        self.cfg = OptimizerConfig(learning_rate=0.1)
        self.state = MomentumState.zeros(3)

    def test_final_momentum_before_step(self):
        with self.assertRaises(MomentumNotReadyError):
            final_momentum(self.state, self.cfg)

    def test_non_finite_gradient(self):
        with self.assertRaises(NonFiniteGradientError) as ctx:
            apply_step(self.state, np.zeros(3), np.array([0.0, np.nan, np.inf]), self.cfg)
        self.assertEqual(ctx.exception.detail["non_finite"], 2)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatchError):
            apply_step(self.state, np.zeros(3), np.zeros(4), self.cfg)
        with self.assertRaises(LengthMismatchError):
            reset(self.state, np.zeros(2))


if __name__ == "__main__":
    unittest.main()
