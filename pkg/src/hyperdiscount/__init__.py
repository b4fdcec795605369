"""Hyperbolically-discounted temporal-difference learning on split reward/punishment signals."""

from .agent import Agent, AgentConfig, StepDiagnostics, Transition
from .envs import ChannelSignal, make_env
from .td_core import (
    HyperParams,
    RunningStats,
    compensate_scale,
    effective_discount,
    hyper_td_error,
    hyperbolic_return_oracle,
    update_avg_discount,
    update_stats,
)

__version__ = "0.1.0"

__all__ = [
    "Agent", "AgentConfig", "ChannelSignal", "HyperParams", "RunningStats", "StepDiagnostics",
    "Transition", "compensate_scale", "effective_discount", "hyper_td_error",
    "hyperbolic_return_oracle", "make_env", "update_avg_discount", "update_stats",
]
