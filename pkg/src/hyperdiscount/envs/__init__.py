"""Reward/punishment variants of the two classic-control tasks."""

from .acrobot import AcrobotConfig, AcrobotRP, AcrobotState
from .base import ChannelSignal, StepResult, wrap_angle
from .cartpole import CartPoleConfig, CartPoleRP, CartPoleState

ENVIRONMENTS = {
    "cartpole-rp": (CartPoleRP, CartPoleConfig),
    "acrobot-rp": (AcrobotRP, AcrobotConfig),
}


def make_env(env_id: str, config=None):
    from ..errors import ConfigurationError

    try:
        env_cls, config_cls = ENVIRONMENTS[env_id]
    except KeyError:
        raise ConfigurationError(f"unknown environment {env_id!r}; choose from {sorted(ENVIRONMENTS)}")
    return env_cls(config if config is not None else config_cls())


__all__ = [
    "AcrobotConfig", "AcrobotRP", "AcrobotState", "CartPoleConfig", "CartPoleRP",
    "CartPoleState", "ChannelSignal", "ENVIRONMENTS", "StepResult", "make_env", "wrap_angle",
]
