"""Scalar kernel for hyperbolically-discounted temporal-difference learning.

Everything here is a pure function over small immutable value types, so the
agent can call it once per channel per step without any bookkeeping.

The effective discount for a state is

    gamma = clamp(1 - kappa * V / (mu + beta * sigma) ** exponent, 0, 1)

where ``mu`` and ``sigma`` are running statistics of the raw channel signal.
The signal entering the TD error is shrunk by ``1 - gamma_bar`` (the running
average of past discounts) so the learned value stays on the scale of a
single-step signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import InvalidInputError

# Floor on (mu + beta * sigma) ** exponent; before any signal is seen the
# discount collapses to 0 for every positive value.
DENOMINATOR_FLOOR = 1e-6


def _check_finite(*values: float) -> None:
    for value in values:
        if not math.isfinite(value):
            raise InvalidInputError(f"non-finite input {value!r}")


@dataclass(frozen=True)
class HyperParams:
    kappa: float = 0.01
    exponent: float = 1.0
    beta: float = 0.1

    def __post_init__(self) -> None:
        _check_finite(self.kappa, self.exponent, self.beta)
        if self.kappa < 0:
            raise InvalidInputError(f"kappa must be >= 0, got {self.kappa}")
        if self.exponent <= 0:
            raise InvalidInputError(f"exponent must be > 0, got {self.exponent}")
        if self.beta < 0:
            raise InvalidInputError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class RunningStats:
    """Exponential-moving statistics of one channel plus its average discount.

    ``var`` is stored and ``std`` derived, so the variance recurrence never
    has to square a rounded square root.
    """

    mean: float = 0.0
    var: float = 0.0
    avg_discount: float = 0.0
    ema_rate: float = 0.001
    count: int = 0

    def __post_init__(self) -> None:
        _check_finite(self.mean, self.var, self.avg_discount)
        if not 0.0 < self.ema_rate <= 1.0:
            raise InvalidInputError(f"ema_rate must be in (0, 1], got {self.ema_rate}")
        if self.var < 0:
            raise InvalidInputError(f"var must be >= 0, got {self.var}")
        if not 0.0 <= self.avg_discount <= 1.0:
            raise InvalidInputError(f"avg_discount must be in [0, 1], got {self.avg_discount}")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)


def _trusted_stats(mean: float, var: float, avg: float, tau: float, count: int) -> RunningStats:
    # fields derived from already-validated values; skip __post_init__ on the hot path
    stats = object.__new__(RunningStats)
    stats.__dict__.update(mean=mean, var=var, avg_discount=avg, ema_rate=tau, count=count)
    return stats


@dataclass(frozen=True)
class TDOutcome:
    delta: float
    gamma_eff: float
    scaled_signal: float


def effective_discount(v_now: float, stats: RunningStats, hp: HyperParams) -> float:
    """State-dependent discount applied to the successor value, clamped to [0, 1]."""
    _check_finite(v_now)
    if v_now < 0:
        raise InvalidInputError(f"v_now must be >= 0, got {v_now}")
    if stats.mean < 0:
        raise InvalidInputError(f"stats.mean must be >= 0, got {stats.mean}")
    denom = max(DENOMINATOR_FLOOR, (stats.mean + hp.beta * stats.std) ** hp.exponent)
    gamma = 1.0 - hp.kappa * v_now / denom
    return min(1.0, max(0.0, gamma))


def hyper_td_error(
    signal_scaled: float,
    gamma_eff: float,
    v_now: float,
    v_next: float,
    terminal: bool,
) -> float:
    _check_finite(signal_scaled, gamma_eff, v_now, v_next)
    if not 0.0 <= gamma_eff <= 1.0:
        raise InvalidInputError(f"gamma_eff must be in [0, 1], got {gamma_eff}")
    bootstrap = 0.0 if terminal else gamma_eff * v_next
    return signal_scaled + bootstrap - v_now


def compensate_scale(signal_raw: float, avg_discount: float) -> float:
    _check_finite(signal_raw, avg_discount)
    if not 0.0 <= avg_discount <= 1.0:
        raise InvalidInputError(f"avg_discount must be in [0, 1], got {avg_discount}")
    return signal_raw * (1.0 - avg_discount)


def update_stats(stats: RunningStats, sample: float) -> RunningStats:
    """Absorb one raw signal sample into the moving mean and variance."""
    _check_finite(sample)
    if sample < 0:
        raise InvalidInputError(f"sample must be >= 0, got {sample}")
    tau = stats.ema_rate
    mean = (1.0 - tau) * stats.mean + tau * sample
    # (sample - old)(sample - new) = (1 - tau)(sample - old)**2 >= 0
    var = (1.0 - tau) * stats.var + tau * (sample - stats.mean) * (sample - mean)
    return _trusted_stats(mean, max(var, 0.0), stats.avg_discount, tau, stats.count + 1)


def update_avg_discount(stats: RunningStats, gamma_eff: float) -> RunningStats:
    _check_finite(gamma_eff)
    if not 0.0 <= gamma_eff <= 1.0:
        raise InvalidInputError(f"gamma_eff must be in [0, 1], got {gamma_eff}")
    tau = stats.ema_rate
    avg = (1.0 - tau) * stats.avg_discount + tau * gamma_eff
    return _trusted_stats(stats.mean, stats.var, min(1.0, max(0.0, avg)), tau, stats.count)


def hyperbolic_return_oracle(signals: Iterable[float], kappa: float) -> float:
    """Truncated hyperbolic return, sum_k signals[k] / (1 + kappa * k).

    Only used to check the recursive machinery in tests.
    """
    return math.fsum(s / (1.0 + kappa * k) for k, s in enumerate(signals))


def td_step(
    signal_raw: float,
    v_now: float,
    v_next: float,
    terminal: bool,
    stats: RunningStats,
    hp: HyperParams,
    compensate: bool = True,
) -> TDOutcome:
    """One channel's full hyperbolic TD computation (no state update)."""
    gamma = effective_discount(v_now, stats, hp)
    scaled = compensate_scale(signal_raw, stats.avg_discount) if compensate else signal_raw
    delta = hyper_td_error(scaled, gamma, v_now, v_next, terminal)
    return TDOutcome(delta=delta, gamma_eff=gamma, scaled_signal=scaled)
