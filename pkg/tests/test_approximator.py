import pickle

import numpy as np
import pytest

from hyperdiscount.approximator import (
    Adam,
    Critic,
    MLPHead,
    Policy,
    export_params,
    finite_diff_check,
    import_params,
    near_kink,
    softmax,
)
from hyperdiscount.errors import ConfigurationError, InvalidInputError

FD_EPS = 1e-6


def rng(seed=0):
    return np.random.default_rng(seed)


def positive_critic(n_inputs=4, hidden=32, seed=0):
    """A critic whose raw output sits well clear of the rectifier at some input."""
    for s in range(seed, seed + 100):
        critic = Critic(n_inputs, hidden, rng=rng(s))
        critic.head.b_out[:] = 0.5
        x = rng(s + 1000).normal(size=n_inputs)
        raw, _ = critic.forward(x)
        if not near_kink(raw, FD_EPS):
            return critic, x
    raise AssertionError("no kink-free critic found")


class TestMLPHead:
    def test_shapes_and_param_count(self):
        head = MLPHead(4, 2, 32, rng=rng())
        assert head.shapes == [(32, 4), (32,), (2, 32), (2,)]
        assert head.n_params == 32 * 4 + 32 + 64 + 2
        assert MLPHead(5, 1, 0, rng=rng()).n_params == 6

    def test_init_range_and_zero_output_bias(self):
        head = MLPHead(4, 3, 16, rng=rng())
        assert np.all(np.abs(head.params) <= 0.1)
        assert np.all(head.b_out == 0.0)

    def test_views_share_storage(self):
        head = MLPHead(3, 1, 4, rng=rng())
        head.params[:] = 0.0
        head.w_in[0, 0] = 2.0
        assert head.params[0] == 2.0

    def test_linear_forward(self):
        head = MLPHead(3, 1, 0, params=[1.0, -2.0, 0.5, 0.25])
        out, _ = head.forward([1.0, 1.0, 2.0])
        assert out[0] == pytest.approx(1.0 - 2.0 + 1.0 + 0.25)

    def test_hidden_forward_hand_value(self):
        # 1 input, 1 hidden unit, 1 output: out = 3 * tanh(2 * x + 0.5) - 1
        head = MLPHead(1, 1, 1, params=[2.0, 0.5, 3.0, -1.0])
        out, h = head.forward([0.25])
        assert h[0] == pytest.approx(np.tanh(1.0))
        assert out[0] == pytest.approx(3.0 * np.tanh(1.0) - 1.0)

    def test_forward_rows_matches_forward(self):
        head = MLPHead(4, 2, 8, rng=rng())
        xs = rng(1).normal(size=(3, 4))
        batched, _ = head.forward_rows(xs)
        for row, x in zip(batched, xs):
            np.testing.assert_allclose(row, head.forward(x)[0], rtol=0, atol=1e-14)

    def test_rejects_wrong_feature_length(self):
        with pytest.raises(ConfigurationError):
            MLPHead(4, 1, 8, rng=rng()).forward(np.zeros(3))

    def test_rejects_bad_params_shape(self):
        with pytest.raises(ConfigurationError):
            MLPHead(2, 1, 0, params=[1.0, 2.0])

    def test_pickle_rebinds_views(self):
        head = MLPHead(3, 2, 4, rng=rng())
        clone = pickle.loads(pickle.dumps(head))
        clone.params[:] = 1.0
        assert np.all(clone.w_out == 1.0)
        assert not np.all(head.w_out == 1.0)


class TestCritic:
    def test_rectified_value(self):
        critic = Critic(2, 0, params=[1.0, 0.0, -3.0])
        assert critic.forward([1.0, 0.0]) == (-2.0, 0.0)
        assert critic.value([5.0, 0.0]) == 2.0

    def test_subgradient_zero_below_kink(self):
        critic = Critic(2, 0, params=[1.0, 0.0, -3.0])
        raw, grad = critic.step_direction([1.0, 0.0])
        assert raw < 0 and not grad.any()

    def test_subgradient_at_zero_is_active(self):
        critic = Critic(2, 0, params=[0.0, 0.0, 0.0])
        _, grad = critic.step_direction([1.0, 2.0])
        np.testing.assert_array_equal(grad, [1.0, 2.0, 1.0])

    def test_linear_update_hand_value(self):
        critic = Critic(2, 0, params=[0.0, 0.0, 0.0])
        critic.update([1.0, 0.0], delta=2.0, lr=0.1)
        np.testing.assert_allclose(critic.params, [0.2, 0.0, 0.2])

    def test_dead_critic_does_not_move(self):
        critic = Critic(2, 0, params=[0.0, 0.0, -1.0])
        before = critic.params.copy()
        critic.update([1.0, 1.0], delta=5.0, lr=0.1)
        np.testing.assert_array_equal(critic.params, before)

    @pytest.mark.parametrize("delta,lr", [(np.nan, 0.1), (1.0, 0.0)])
    def test_update_rejects(self, delta, lr):
        with pytest.raises(InvalidInputError):
            Critic(2, 0, params=[0.0, 0.0, 0.0]).update([1.0, 0.0], delta, lr)

    def test_update_reduces_squared_error(self):
        critic, x = positive_critic()
        target = critic.value(x) + 0.3
        before = (target - critic.value(x)) ** 2
        critic.update(x, target - critic.value(x), 1e-3)
        assert (target - critic.value(x)) ** 2 < before

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_finite_difference_hidden(self, seed):
        critic, x = positive_critic(seed=seed * 10)
        grad = critic.raw_gradient(x)
        err = finite_diff_check(lambda: critic.forward(x)[1], grad, critic.params, FD_EPS)
        assert err <= 1e-4

    def test_finite_difference_linear(self):
        critic = Critic(4, 0, params=[0.3, -0.2, 0.1, 0.4, 1.0])
        x = np.array([0.5, -1.0, 2.0, 0.25])
        err = finite_diff_check(lambda: critic.forward(x)[1], critic.raw_gradient(x), critic.params, FD_EPS)
        assert err < 1e-9


class TestPolicy:
    def test_softmax_stable_and_normalised(self):
        p = softmax(np.array([1000.0, 1000.0, -1000.0]))
        np.testing.assert_allclose(p, [0.5, 0.5, 0.0], atol=1e-15)
        assert p.sum() == pytest.approx(1.0)

    def test_uniform_at_zero_params(self):
        policy = Policy(3, 2, 0, params=np.zeros(8))
        np.testing.assert_array_equal(policy.forward([1.0, 2.0, 3.0]), [0.5, 0.5])

    def test_log_prob_gradient_sums_to_zero_over_policy(self):
        # E_a[grad log pi(a)] = 0
        policy = Policy(4, 3, 8, rng=rng())
        x = rng(2).normal(size=4)
        probs = policy.forward(x)
        expected = sum(p * policy.log_prob_gradient(x, a) for a, p in enumerate(probs))
        np.testing.assert_allclose(expected, 0.0, atol=1e-15)

    @pytest.mark.parametrize("action", [0, 1])
    def test_finite_difference_log_likelihood(self, action):
        policy = Policy(4, 2, 32, rng=rng(3))
        x = rng(4).normal(size=4)
        grad = policy.log_prob_gradient(x, action)
        err = finite_diff_check(lambda: float(np.log(policy.forward(x)[action])), grad, policy.params, FD_EPS)
        assert err <= 1e-4

    def test_finite_difference_linear(self):
        policy = Policy(3, 2, 0, rng=rng(5))
        x = np.array([0.2, -0.4, 1.0])
        grad = policy.log_prob_gradient(x, 1)
        err = finite_diff_check(lambda: float(np.log(policy.forward(x)[1])), grad, policy.params, FD_EPS)
        assert err < 1e-9

    def test_positive_advantage_raises_probability(self):
        policy = Policy(4, 2, 8, rng=rng(6))
        x = rng(7).normal(size=4)
        before = policy.forward(x)[1]
        policy.update(x, 1, advantage=1.0, lr=0.1)
        assert policy.forward(x)[1] > before

    def test_update_rejects_bad_action(self):
        with pytest.raises(InvalidInputError):
            Policy(2, 2, 0, rng=rng()).update([0.0, 1.0], 2, 1.0, 0.1)


class TestAdam:
    def test_first_step_is_lr_times_sign(self):
        opt = Adam(3, lr=0.01)
        step = opt.step(np.array([2.0, -0.5, 0.0]))
        np.testing.assert_allclose(step, [0.01, -0.01, 0.0], atol=1e-9)


class TestFiniteDiffCheck:
    def test_rejects_eps_outside_range(self):
        p = np.zeros(1)
        with pytest.raises(InvalidInputError):
            finite_diff_check(lambda: 0.0, np.zeros(1), p, eps=1e-2)

    def test_restores_params(self):
        p = np.array([1.0, 2.0])
        finite_diff_check(lambda: float(p @ p), 2 * p.copy(), p)
        np.testing.assert_array_equal(p, [1.0, 2.0])

    def test_detects_wrong_gradient(self):
        p = np.array([1.0, 2.0])
        assert finite_diff_check(lambda: float(p @ p), p.copy(), p) > 0.4

    def test_near_kink(self):
        assert near_kink(5e-6, 1e-6)
        assert not near_kink(1e-4, 1e-6)


class TestSnapshot:
    @pytest.mark.parametrize("hidden", [0, 32])
    def test_round_trip_exact(self, hidden):
        head = MLPHead(4, 2, hidden, rng=rng(8))
        head.params[0] = 1 / 3  # needs full repr precision
        name, back = import_params(export_params(head, "actor"))
        assert name == "actor"
        assert back.shapes == head.shapes
        np.testing.assert_array_equal(back.params, head.params)

    def test_header_format(self):
        text = export_params(MLPHead(4, 1, 32, rng=rng()), "critic_r")
        assert text.splitlines()[0] == "# head=critic_r inputs=4 hidden=32 outputs=1 shapes=32x4,32,1x32,1"

    def test_rejects_missing_header(self):
        with pytest.raises(ConfigurationError):
            import_params("0.5\n0.25\n")

    def test_rejects_truncated_body(self):
        text = export_params(MLPHead(2, 1, 0, rng=rng()), "c")
        with pytest.raises(ConfigurationError):
            import_params("\n".join(text.splitlines()[:-1]))


def test_adam_matches_textbook_update():
    g = np.random.default_rng(0).normal(size=(5, 4))
    opt = Adam(4, lr=0.01)
    m = v = np.zeros(4)
    for t, d in enumerate(g, 1):
        m = 0.9 * m + 0.1 * d
        v = 0.999 * v + 0.001 * d * d
        expected = 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(opt.step(d), expected, rtol=1e-12)
