import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperdiscount.envs import ENVIRONMENTS, AcrobotConfig, AcrobotRP, CartPoleConfig, CartPoleRP, make_env
from hyperdiscount.envs import acrobot, cartpole
from hyperdiscount.envs.acrobot import AcrobotState, mechanical_energy, tip_height
from hyperdiscount.envs.base import ChannelSignal, wrap_angle
from hyperdiscount.envs.cartpole import CartPoleState
from hyperdiscount.errors import ConfigurationError, DynamicsError, InvalidInputError, ProtocolError


def rollout(env, seed, n_steps, action_seed=0):
    rng = np.random.default_rng(action_seed)
    obs = [env.reset(seed)]
    results = []
    for _ in range(n_steps):
        res = env.step(int(rng.integers(env.n_actions)))
        results.append(res)
        obs.append(res.observation)
        if res.terminal or res.truncated:
            obs.append(env.reset(int(rng.integers(1 << 30))))
    return np.array(obs), results


class TestBase:
    def test_channel_signal_rejects_negative(self):
        with pytest.raises(InvalidInputError):
            ChannelSignal(-0.1, 0.0)
        with pytest.raises(InvalidInputError):
            ChannelSignal(0.0, math.nan)

    @pytest.mark.parametrize("r,expected", [(2.0, (2.0, 0.0)), (-0.5, (0.0, 0.5)), (0.0, (0.0, 0.0))])
    def test_from_scalar(self, r, expected):
        s = ChannelSignal.from_scalar(r)
        assert (s.reward, s.punish) == expected

    @given(st.floats(-100.0, 100.0))
    def test_wrap_angle_range(self, x):
        y = wrap_angle(x)
        assert -math.pi < y <= math.pi
        assert math.isclose(math.cos(y), math.cos(x), abs_tol=1e-9)

    def test_wrap_angle_pi(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi

    def test_make_env(self):
        assert set(ENVIRONMENTS) == {"cartpole-rp", "acrobot-rp"}
        assert isinstance(make_env("acrobot-rp"), AcrobotRP)
        with pytest.raises(ConfigurationError):
            make_env("pendulum")


@pytest.mark.parametrize("cls,n_features", [(CartPoleRP, 4), (AcrobotRP, 6)])
class TestCommon:
    def test_same_seed_identical(self, cls, n_features):
        a, _ = rollout(cls(), 11, 300)
        b, _ = rollout(cls(), 11, 300)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self, cls, n_features):
        assert not np.array_equal(cls().reset(1), cls().reset(2))

    def test_feature_length(self, cls, n_features):
        env = cls()
        assert env.reset(0).shape == (n_features,)
        assert env.n_features == n_features

    def test_channels_nonnegative_and_finite(self, cls, n_features):
        obs, results = rollout(cls(), 3, 2000, action_seed=4)
        assert np.isfinite(obs).all()
        for res in results:
            assert res.signal.reward >= 0 and res.signal.punish >= 0
            assert not (res.terminal and res.truncated)

    def test_step_before_reset(self, cls, n_features):
        with pytest.raises(ProtocolError):
            cls().step(0)

    def test_step_after_episode_end(self, cls, n_features):
        env = cls()
        env.reset(0)
        while True:
            res = env.step(0)
            if res.terminal or res.truncated:
                break
        with pytest.raises(ProtocolError):
            env.step(0)

    def test_invalid_action(self, cls, n_features):
        env = cls()
        env.reset(0)
        with pytest.raises(InvalidInputError):
            env.step(7)


class TestCartPole:
    def test_upright_equilibrium(self):
        env = CartPoleRP()
        s = CartPoleState(0.0, 0.0, 0.0, 0.0)
        for _ in range(100):
            s = cartpole.integrate_dynamics(s, 0.0, env.config)
        assert s == (0.0, 0.0, 0.0, 0.0)
        sig = env.signal(s, env.failed(s))
        assert (sig.reward, sig.punish) == (1.0, 0.0)

    def test_positive_force_accelerates_cart(self):
        s = cartpole.integrate_dynamics(CartPoleState(0.0, 0.0, 0.0, 0.0), 10.0, CartPoleConfig())
        assert s.cart_velocity > 0.0

    def test_failure_beyond_track(self):
        env = CartPoleRP()
        env.reset(0)
        env.state = CartPoleState(2.4, 1.0, 0.0, 0.0)
        res = env.step(1)
        assert env.state.cart_position > 2.4
        assert res.terminal and not res.truncated
        assert res.signal.punish == 1.0

    def test_failure_beyond_angle(self):
        env = CartPoleRP()
        env.reset(0)
        env.state = CartPoleState(0.0, 0.0, 0.2099, 1.0)
        res = env.step(0)
        assert res.terminal and res.signal.punish == 1.0
        assert res.signal.reward == pytest.approx(0.5 * (1 + math.cos(env.state.pole_angle)))

    def test_truncation_at_horizon(self):
        env = CartPoleRP(CartPoleConfig(horizon=3))
        env.reset(0)
        flags = [env.step(i % 2) for i in range(3)]
        assert [r.truncated for r in flags] == [False, False, True]
        assert not any(r.terminal for r in flags)

    def test_features_scaled(self):
        env = CartPoleRP()
        f = env.features(CartPoleState(1.2, 1.0, 0.105, -2.0))
        np.testing.assert_allclose(f, [0.5, 0.5, 0.5, -1.0])

    def test_dynamics_error(self):
        with pytest.raises(DynamicsError):
            cartpole.integrate_dynamics(CartPoleState(0.0, 0.0, 0.0, 0.0), math.inf, CartPoleConfig())


class TestAcrobot:
    def test_hanging_down_signal(self):
        env = AcrobotRP()
        down = AcrobotState(0.0, 0.0, 0.0, 0.0)
        assert tip_height(down) == -2.0
        for torque in (-1.0, 0.0, 1.0):
            sig = env.signal(down, torque)
            assert sig.reward == 0.0
            assert sig.punish == pytest.approx(0.01 * abs(torque) + 0.01, abs=1e-15)

    def test_upright_rewarded(self):
        sig = AcrobotRP().signal(AcrobotState(math.pi, 0.0, 0.0, 0.0), 0.0)
        assert sig.reward == 1.0

    def test_rest_hanging_down_is_fixed(self):
        c = AcrobotConfig()
        s = AcrobotState(0.0, 0.0, 0.0, 0.0)
        assert acrobot.integrate_dynamics(s, 0.0, c.dt, c) == s

    def test_energy_drift(self):
        c = AcrobotConfig()
        # relative to the potential-energy span between hanging and upright
        span = 2.0 * c.gravity * (c.link_mass_1 * c.link_com_1 + c.link_mass_2 * c.link_length_1
                                  + c.link_mass_2 * c.link_com_2)
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(20):
            s = AcrobotState(*rng.uniform(-math.pi, math.pi, 2), *rng.uniform(-1.0, 1.0, 2))
            e0 = mechanical_energy(s, c)
            for _ in range(50):
                s = acrobot.integrate_dynamics(s, 0.0, c.dt, c)
                worst = max(worst, abs(mechanical_energy(s, c) - e0) / span)
        assert worst < 1e-3

    def test_wrap_and_clamp(self):
        env = AcrobotRP()
        env.reset(0)
        env.state = AcrobotState(3.1, -3.1, 100.0, -100.0)
        env.step(2)
        s = env.state
        assert -math.pi < s.theta1 <= math.pi and -math.pi < s.theta2 <= math.pi
        assert abs(s.dtheta1) <= env.config.max_vel_1 and abs(s.dtheta2) <= env.config.max_vel_2

    def test_truncation_only(self):
        env = AcrobotRP(AcrobotConfig(horizon=5))
        env.reset(0)
        results = [env.step(1) for _ in range(5)]
        assert [r.truncated for r in results] == [False] * 4 + [True]
        assert not any(r.terminal for r in results)

    def test_action_count_follows_torques(self):
        assert AcrobotRP(AcrobotConfig(torques=(-2.0, 2.0))).n_actions == 2
