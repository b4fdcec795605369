from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True)
class ChannelSignal:
    """One step's signal split into two non-negative channels."""

    reward: float
    punish: float

    def __post_init__(self) -> None:
        for name in ("reward", "punish"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidInputError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_scalar(cls, r: float) -> "ChannelSignal":
        """Split a signed scalar: positive part is reward, negated negative part is punishment."""
        return cls(reward=max(r, 0.0), punish=max(-r, 0.0))


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    signal: ChannelSignal
    terminal: bool
    truncated: bool


def wrap_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y <= 0.0:
        y += 2.0 * math.pi
    return y - math.pi
