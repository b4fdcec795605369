"""Cart-pole balancing with a continuous reward and an event-based punishment.

Reward is paid every step in proportion to how upright the pole is; the
punishment fires once, on the step the cart leaves the track or the pole
falls past the angle threshold, and that step ends the episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DynamicsError, InvalidInputError, ProtocolError
from .base import ChannelSignal, StepResult, wrap_angle


class CartPoleState(NamedTuple):
    cart_position: float
    cart_velocity: float
    pole_angle: float
    pole_angular_velocity: float


@dataclass(frozen=True)
class CartPoleConfig:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force_mag: float = 10.0
    dt: float = 0.02
    x_threshold: float = 2.4
    angle_threshold: float = 0.21
    horizon: int = 500
    reset_range: float = 0.05
    reward_scale: float = 1.0
    punish_magnitude: float = 1.0
    # feature = state / scale
    velocity_scale: float = 2.0
    angular_velocity_scale: float = 2.0


def integrate_dynamics(state: CartPoleState, force: float, config: CartPoleConfig) -> CartPoleState:
    """One explicit Euler step of the frictionless cart-pole equations."""
    x, x_dot, theta, theta_dot = state
    cos, sin = math.cos(theta), math.sin(theta)
    total_mass = config.cart_mass + config.pole_mass
    pole_moment = config.pole_mass * config.pole_half_length

    temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass
    theta_acc = (config.gravity * sin - cos * temp) / (
        config.pole_half_length * (4.0 / 3.0 - config.pole_mass * cos * cos / total_mass)
    )
    x_acc = temp - pole_moment * theta_acc * cos / total_mass

    dt = config.dt
    new = CartPoleState(
        x + dt * x_dot,
        x_dot + dt * x_acc,
        wrap_angle(theta + dt * theta_dot),
        theta_dot + dt * theta_acc,
    )
    if not all(math.isfinite(v) for v in new):
        raise DynamicsError(f"non-finite cart-pole state {new}")
    return new


class CartPoleRP:
    n_actions = 2
    n_features = 4

    def __init__(self, config: CartPoleConfig | None = None):
        self.config = config or CartPoleConfig()
        self.state: CartPoleState | None = None
        self.steps = 0
        self._done = True

    def features(self, state: CartPoleState | None = None) -> np.ndarray:
        s = self.state if state is None else state
        c = self.config
        return np.array([
            s.cart_position / c.x_threshold,
            s.cart_velocity / c.velocity_scale,
            s.pole_angle / c.angle_threshold,
            s.pole_angular_velocity / c.angular_velocity_scale,
        ])

    def reset(self, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        r = self.config.reset_range
        self.state = CartPoleState(*(float(v) for v in rng.uniform(-r, r, size=4)))
        self.steps = 0
        self._done = False
        return self.features()

    def signal(self, state: CartPoleState, failed: bool) -> ChannelSignal:
        c = self.config
        reward = c.reward_scale * 0.5 * (1.0 + math.cos(state.pole_angle))
        return ChannelSignal(reward=reward, punish=c.punish_magnitude if failed else 0.0)

    def failed(self, state: CartPoleState) -> bool:
        c = self.config
        return abs(state.cart_position) > c.x_threshold or abs(state.pole_angle) > c.angle_threshold

    def step(self, action: int) -> StepResult:
        if self._done:
            raise ProtocolError("step() called on a finished episode; call reset() first")
        if action not in (0, 1):
            raise InvalidInputError(f"cart-pole action must be 0 or 1, got {action!r}")
        force = self.config.force_mag if action == 1 else -self.config.force_mag
        self.state = integrate_dynamics(self.state, force, self.config)
        self.steps += 1
        terminal = self.failed(self.state)
        truncated = not terminal and self.steps >= self.config.horizon
        self._done = terminal or truncated
        return StepResult(self.features(), self.signal(self.state, terminal), terminal, truncated)
