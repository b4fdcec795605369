"""Two-link underactuated swing-up with an event reward and a continuous punishment.

Reward is paid on every step the tip is above the target height; the
punishment is charged every step, growing with the applied torque.  Episodes
only end by time limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ConfigurationError, DynamicsError, InvalidInputError, ProtocolError
from .base import ChannelSignal, StepResult, wrap_angle


class AcrobotState(NamedTuple):
    theta1: float
    theta2: float
    dtheta1: float
    dtheta2: float


@dataclass(frozen=True)
class AcrobotConfig:
    gravity: float = 9.8
    link_mass_1: float = 1.0
    link_mass_2: float = 1.0
    link_length_1: float = 1.0
    link_com_1: float = 0.5
    link_com_2: float = 0.5
    link_moi: float = 1.0
    dt: float = 0.2
    max_vel_1: float = 4.0 * math.pi
    max_vel_2: float = 9.0 * math.pi
    torques: tuple[float, ...] = (-1.0, 0.0, 1.0)
    horizon: int = 200
    reset_range: float = 0.1
    success_height: float = 1.0
    reward_magnitude: float = 1.0
    torque_cost: float = 0.01
    step_cost: float = 0.01
    substeps: int = 4

    def __post_init__(self) -> None:
        # lists from JSON or config files would make the config unhashable
        object.__setattr__(self, "torques", tuple(float(t) for t in self.torques))
        if not self.torques or self.horizon < 1 or self.substeps < 1 or self.dt <= 0:
            raise ConfigurationError("acrobot needs torques, horizon >= 1, substeps >= 1, dt > 0")


def _make_derivatives(c: AcrobotConfig):
    """Angular accelerations as a closure over precomputed inertia constants."""
    m2, l1, lc2, moi = c.link_mass_2, c.link_length_1, c.link_com_2, c.link_moi
    d1_const = c.link_mass_1 * c.link_com_1 ** 2 + m2 * (l1 * l1 + lc2 * lc2) + 2.0 * moi
    d1_cos = 2.0 * m2 * l1 * lc2
    d2_const = m2 * lc2 * lc2 + moi
    d2_cos = m2 * l1 * lc2
    coupling = m2 * l1 * lc2
    g1 = (c.link_mass_1 * c.link_com_1 + m2 * l1) * c.gravity
    g2 = m2 * lc2 * c.gravity
    d3 = m2 * lc2 * lc2 + moi
    sin, cos = math.sin, math.cos

    def derivatives(theta1, theta2, dtheta1, dtheta2, torque):
        cos2, sin2 = cos(theta2), sin(theta2)
        d1 = d1_const + d1_cos * cos2
        d2 = d2_const + d2_cos * cos2
        phi2 = g2 * sin(theta1 + theta2)
        phi1 = -coupling * sin2 * dtheta2 * (dtheta2 + 2.0 * dtheta1) + g1 * sin(theta1) + phi2
        ddtheta2 = (torque + d2 / d1 * phi1 - coupling * dtheta1 * dtheta1 * sin2 - phi2) / (d3 - d2 * d2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return ddtheta1, ddtheta2

    return derivatives


def integrate_dynamics(state: AcrobotState, torque: float, dt: float,
                       config: AcrobotConfig, _cache={}) -> AcrobotState:
    """Advance ``dt`` seconds by classic RK4 with the torque held constant.

    The interval is split into ``config.substeps`` equal RK4 steps.  No angle
    wrapping or velocity clamping happens here.
    """
    f = _cache.get(config)
    if f is None:
        f = _cache[config] = _make_derivatives(config)
    a, b, va, vb = state
    h = dt / config.substeps
    hh = 0.5 * h
    for _ in range(config.substeps):
        k1a, k1b = f(a, b, va, vb, torque)
        va2, vb2 = va + hh * k1a, vb + hh * k1b
        k2a, k2b = f(a + hh * va, b + hh * vb, va2, vb2, torque)
        va3, vb3 = va + hh * k2a, vb + hh * k2b
        k3a, k3b = f(a + hh * va2, b + hh * vb2, va3, vb3, torque)
        va4, vb4 = va + h * k3a, vb + h * k3b
        k4a, k4b = f(a + h * va3, b + h * vb3, va4, vb4, torque)
        a += h / 6.0 * (va + 2.0 * va2 + 2.0 * va3 + va4)
        b += h / 6.0 * (vb + 2.0 * vb2 + 2.0 * vb3 + vb4)
        va += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        vb += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    if not all(math.isfinite(v) for v in (a, b, va, vb)):
        raise DynamicsError(f"non-finite acrobot state {(a, b, va, vb)}")
    return AcrobotState(a, b, va, vb)


def mechanical_energy(s: AcrobotState, config: AcrobotConfig) -> float:
    """Kinetic plus potential energy, potential measured from the pivot."""
    c = config
    m1, m2 = c.link_mass_1, c.link_mass_2
    l1, lc1, lc2, moi, g = c.link_length_1, c.link_com_1, c.link_com_2, c.link_moi, c.gravity
    cos2 = math.cos(s.theta2)
    d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2.0 * l1 * lc2 * cos2) + 2.0 * moi
    d2 = m2 * (lc2 ** 2 + l1 * lc2 * cos2) + moi
    d3 = m2 * lc2 ** 2 + moi
    kinetic = 0.5 * (d1 * s.dtheta1 ** 2 + 2.0 * d2 * s.dtheta1 * s.dtheta2 + d3 * s.dtheta2 ** 2)
    potential = -(m1 * lc1 + m2 * l1) * g * math.cos(s.theta1) - m2 * lc2 * g * math.cos(s.theta1 + s.theta2)
    return kinetic + potential


def tip_height(s: AcrobotState) -> float:
    """Height of the tip above the pivot for unit-length links."""
    return -math.cos(s.theta1) - math.cos(s.theta1 + s.theta2)


class AcrobotRP:
    n_features = 6

    def __init__(self, config: AcrobotConfig | None = None):
        self.config = config or AcrobotConfig()
        self.n_actions = len(self.config.torques)
        self.state: AcrobotState | None = None
        self.steps = 0
        self._done = True

    def features(self, state: AcrobotState | None = None) -> np.ndarray:
        s = self.state if state is None else state
        c = self.config
        return np.array([
            math.cos(s.theta1), math.sin(s.theta1),
            math.cos(s.theta2), math.sin(s.theta2),
            s.dtheta1 / c.max_vel_1, s.dtheta2 / c.max_vel_2,
        ])

    def reset(self, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        r = self.config.reset_range
        self.state = AcrobotState(*(float(v) for v in rng.uniform(-r, r, size=4)))
        self.steps = 0
        self._done = False
        return self.features()

    def signal(self, state: AcrobotState, torque: float) -> ChannelSignal:
        c = self.config
        achieved = tip_height(state) > c.success_height
        return ChannelSignal(
            reward=c.reward_magnitude if achieved else 0.0,
            punish=c.torque_cost * abs(torque) + c.step_cost,
        )

    def step(self, action: int) -> StepResult:
        if self._done:
            raise ProtocolError("step() called on a finished episode; call reset() first")
        if not (isinstance(action, (int, np.integer)) and 0 <= action < self.n_actions):
            raise InvalidInputError(f"acrobot action must be in [0, {self.n_actions}), got {action!r}")
        c = self.config
        torque = c.torques[action]
        s = integrate_dynamics(self.state, torque, c.dt, c)
        self.state = AcrobotState(
            wrap_angle(s.theta1),
            wrap_angle(s.theta2),
            min(max(s.dtheta1, -c.max_vel_1), c.max_vel_1),
            min(max(s.dtheta2, -c.max_vel_2), c.max_vel_2),
        )
        self.steps += 1
        truncated = self.steps >= c.horizon
        self._done = truncated
        return StepResult(self.features(), self.signal(self.state, torque), False, truncated)
