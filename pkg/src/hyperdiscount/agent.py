"""Reward/punishment actor-critic with hyperbolic or fixed exponential discounting.

Both modes keep two rectified critics, one per channel, and a softmax actor
driven by the difference of the two TD errors.  Only the discount rule
differs: hyperbolic mode derives a per-state discount from the critic's own
value and the channel's running statistics, exponential mode uses a constant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, td_core
from .approximator import Adam, Critic, Policy
from .envs.base import ChannelSignal
from .errors import ConfigurationError, InvalidInputError, NotReadyError
from .td_core import HyperParams, RunningStats

log = logging.getLogger(__name__)

MODES = ("hyperbolic", "exponential")
OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class AgentConfig:
    mode: str = "hyperbolic"
    hyper: HyperParams = field(default_factory=HyperParams)
    gamma_reward: float = 0.99
    gamma_punish: float = 0.99
    critic_lr: float = 0.03
    actor_lr: float = 1e-3
    ema_rate: float = 1e-3
    hidden: int = 32
    seed: int = 0
    # scale compensation by (1 - average discount); hyperbolic mode only
    compensate: bool = True
    critic_optimizer: str = "sgd"
    # Adam on the actor; plain SGD on the rectified critics, which Adam tends to kill
    actor_optimizer: str = "adam"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("gamma_reward", "gamma_punish"):
            g = getattr(self, name)
            if not 0.0 <= g <= 1.0:
                raise InvalidInputError(f"{name} must be in [0, 1], got {g}")
        if self.critic_lr <= 0 or self.actor_lr <= 0:
            raise InvalidInputError("learning rates must be > 0")
        for name in ("critic_optimizer", "actor_optimizer"):
            if getattr(self, name) not in OPTIMIZERS:
                raise ConfigurationError(f"{name} must be one of {OPTIMIZERS}, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class Transition:
    state_features: np.ndarray
    action: int
    signal: ChannelSignal
    next_state_features: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class StepDiagnostics:
    delta_r: float
    delta_q: float
    gamma_r: float
    gamma_q: float
    v_r: float
    v_q: float
    rejected: bool = False


class Agent:
    """One learner; owns its heads, statistics and random generator."""

    def __init__(self, n_features: int, n_actions: int, config: AgentConfig | None = None):
        self.config = config or AgentConfig()
        self.n_features = n_features
        self.n_actions = n_actions
        self.rng = np.random.default_rng(self.config.seed)
        hidden = self.config.hidden
        self.critic_r = Critic(n_features, hidden, rng=self.rng)
        self.critic_q = Critic(n_features, hidden, rng=self.rng)
        self.policy = Policy(n_features, n_actions, hidden, rng=self.rng)
        self.stats_r = RunningStats(ema_rate=self.config.ema_rate)
        self.stats_q = RunningStats(ema_rate=self.config.ema_rate)
        self.rejected_steps = 0
        cfg = self.config
        self._adam = {}
        if cfg.critic_optimizer == "adam":
            self._adam["critic_r"] = Adam(self.critic_r.params.size, cfg.critic_lr)
            self._adam["critic_q"] = Adam(self.critic_q.params.size, cfg.critic_lr)
        if cfg.actor_optimizer == "adam":
            self._adam["policy"] = Adam(self.policy.params.size, cfg.actor_lr)
        # scratch buffers for the compiled kernels
        width = max(hidden, 1)
        self._h = np.empty(width)
        self._h_pi = np.empty(width)
        self._scores = np.empty(n_actions)
        self._g_r = np.empty(self.critic_r.params.size)
        self._g_q = np.empty(self.critic_q.params.size)
        self._g_pi = np.empty(self.policy.params.size)
        self._pi_cached_for = None

    def _features(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ConfigurationError(f"expected {self.n_features} features, got shape {x.shape}")
        return x

    def act(self, state_features) -> int:
        x = self._features(state_features)
        u = self.rng.random()
        action = _kernels.policy_sample(self.policy.params, self.n_features, self.config.hidden,
                                        self.n_actions, x, self._h_pi, self._scores, u)
        # learn() on the same features object reuses this forward pass
        self._pi_cached_for = state_features
        return int(action)

    def combined_value(self, state_features) -> float:
        x = self._features(state_features)
        return self.critic_r.value(x) - self.critic_q.value(x)

    def snapshot_discount_averages(self) -> tuple[float, float]:
        if self.stats_r.count == 0:
            raise NotReadyError("no steps absorbed yet")
        return self.stats_r.avg_discount, self.stats_q.avg_discount

    def _channel(self, critic: Critic, grad: np.ndarray, stats: RunningStats, fixed_gamma: float,
                 signal: float, x: np.ndarray, x_next: np.ndarray, terminal: bool):
        raw, raw_next = _kernels.critic_pair(critic.params, self.n_features, self.config.hidden,
                                             x, x_next, self._h, grad)
        v = max(0.0, raw)
        v_next = max(0.0, raw_next)
        cfg = self.config
        if cfg.mode == "hyperbolic":
            outcome = td_core.td_step(signal, v, v_next, terminal, stats, cfg.hyper,
                                      compensate=cfg.compensate)
            gamma, delta = outcome.gamma_eff, outcome.delta
        else:
            gamma = fixed_gamma
            delta = td_core.hyper_td_error(signal, gamma, v, v_next, terminal)
        # rectifier subgradient: zero on the negative side
        return v, gamma, delta, raw >= 0.0

    def learn(self, transition: Transition) -> StepDiagnostics:
        """One online actor-critic update; the state is untouched if anything is non-finite."""
        cfg = self.config
        x = self._features(transition.state_features)
        x_next = self._features(transition.next_state_features)
        if not 0 <= transition.action < self.n_actions:
            raise InvalidInputError(f"action {transition.action} outside [0, {self.n_actions})")
        sig, terminal = transition.signal, transition.terminal

        try:
            v_r, gamma_r, delta_r, active_r = self._channel(
                self.critic_r, self._g_r, self.stats_r, cfg.gamma_reward, sig.reward, x, x_next, terminal)
            v_q, gamma_q, delta_q, active_q = self._channel(
                self.critic_q, self._g_q, self.stats_q, cfg.gamma_punish, sig.punish, x, x_next, terminal)
        except InvalidInputError as exc:
            return self._reject(exc, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan)

        advantage = delta_r - delta_q
        n, hidden, m = self.n_features, cfg.hidden, self.n_actions
        if self._pi_cached_for is not transition.state_features:
            _kernels.forward(self.policy.params, n, hidden, m, x, self._h_pi, self._scores)
        _kernels.log_prob_grad(self.policy.params, n, hidden, m, x, self._h_pi, self._scores,
                               transition.action, self._g_pi)
        self._pi_cached_for = None
        # (name, params, lr, scale, grad): ascent direction is scale * grad
        updates = []
        if active_r and delta_r != 0.0:
            updates.append(("critic_r", self.critic_r.params, cfg.critic_lr, delta_r, self._g_r))
        if active_q and delta_q != 0.0:
            updates.append(("critic_q", self.critic_q.params, cfg.critic_lr, delta_q, self._g_q))
        if advantage != 0.0:
            updates.append(("policy", self.policy.params, cfg.actor_lr, advantage, self._g_pi))
        # the squared norm is inf/nan whenever any entry is (or overflows, which is rejected too)
        if not (math.isfinite(advantage)
                and all(math.isfinite(_kernels.scaled_sq_norm(c, g)) for *_, c, g in updates)):
            return self._reject("non-finite update", delta_r, delta_q, gamma_r, gamma_q, v_r, v_q)

        for name, params, lr, scale, grad in updates:
            opt = self._adam.get(name)
            if opt is None:
                _kernels.sgd_apply(params, lr * scale, grad)
            else:
                opt.t += 1
                _kernels.adam_apply(params, opt.m, opt.v, opt.t, opt.lr, opt.beta1, opt.beta2, opt.eps,
                                    scale, grad)
        self.stats_r = td_core.update_avg_discount(td_core.update_stats(self.stats_r, sig.reward), gamma_r)
        self.stats_q = td_core.update_avg_discount(td_core.update_stats(self.stats_q, sig.punish), gamma_q)
        return StepDiagnostics(delta_r, delta_q, gamma_r, gamma_q, v_r, v_q)

    def _reject(self, reason, *values) -> StepDiagnostics:
        self.rejected_steps += 1
        log.warning("rejected learning step (%s)", reason)
        return StepDiagnostics(*values, rejected=True)

    def action_probabilities(self, state_features) -> np.ndarray:
        return self.policy.forward(self._features(state_features))

    # checkpointing

    def state_dict(self) -> dict:
        def stats(s: RunningStats) -> dict:
            return {"mean": s.mean, "var": s.var, "avg_discount": s.avg_discount,
                    "ema_rate": s.ema_rate, "count": s.count}

        return {
            "n_features": self.n_features,
            "n_actions": self.n_actions,
            "critic_r": self.critic_r.params.tolist(),
            "critic_q": self.critic_q.params.tolist(),
            "policy": self.policy.params.tolist(),
            "stats_r": stats(self.stats_r),
            "stats_q": stats(self.stats_q),
            "rng": self.rng.bit_generator.state,
            "rejected_steps": self.rejected_steps,
            "adam": {name: {"m": opt.m.tolist(), "v": opt.v.tolist(), "t": opt.t}
                     for name, opt in self._adam.items()},
        }

    @classmethod
    def from_state_dict(cls, state: dict, config: AgentConfig) -> "Agent":
        agent = cls(state["n_features"], state["n_actions"], config)
        agent.critic_r.params[:] = state["critic_r"]
        agent.critic_q.params[:] = state["critic_q"]
        agent.policy.params[:] = state["policy"]
        agent.stats_r = RunningStats(**state["stats_r"])
        agent.stats_q = RunningStats(**state["stats_q"])
        agent.rng.bit_generator.state = state["rng"]
        agent.rejected_steps = state["rejected_steps"]
        for name, moments in state.get("adam", {}).items():
            opt = agent._adam[name]
            opt.m[:], opt.v[:], opt.t = moments["m"], moments["v"], moments["t"]
        return agent


__all__ = ["Agent", "AgentConfig", "ChannelSignal", "StepDiagnostics", "Transition"]
