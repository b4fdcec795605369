"""Seeded multi-trial training, the three-case comparison, and CSV output.

Trial ``i`` of an experiment always uses seed ``base_seed + i``; from that
seed the agent's generator and the environment's reset seeds are derived, so
a trial is reproducible on its own and independent of which worker ran it.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import Agent, AgentConfig, Transition
from .approximator import export_params, import_params
from .envs import make_env
from .errors import ConfigurationError, DynamicsError, InvalidInputError

log = logging.getLogger(__name__)

EPISODE_COLUMNS = ("trial", "episode", "reward_sum", "punish_sum", "return",
                   "mean_gamma_r", "mean_gamma_q", "steps")
METRICS = ("reward_sum", "punish_sum", "return", "mean_gamma_r", "mean_gamma_q", "steps")
CASES = ("hyperbolic", "exponential1", "exponential2")


@dataclass(frozen=True)
class ExperimentConfig:
    env_id: str = "cartpole-rp"
    agent: AgentConfig = field(default_factory=AgentConfig)
    env_config: object = None
    trials: int = 50
    episodes: int = 300
    base_seed: int = 0
    out_dir: str = "results"
    jobs: int = 1
    save_checkpoints: bool = False  # one agent checkpoint per trial under out_dir/checkpoints

    def __post_init__(self) -> None:
        if self.trials < 1 or self.episodes < 1:
            raise ConfigurationError("trials and episodes must be >= 1")
        make_env(self.env_id, self.env_config)  # validates the id

    def trial_seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.trials)]


@dataclass(frozen=True)
class EpisodeRecord:
    trial: int
    episode: int
    reward_sum: float
    punish_sum: float
    mean_gamma_r: float
    mean_gamma_q: float
    steps: int

    @property
    def return_(self) -> float:
        return self.reward_sum - self.punish_sum

    def row(self) -> dict:
        return {"trial": self.trial, "episode": self.episode, "reward_sum": self.reward_sum,
                "punish_sum": self.punish_sum, "return": self.return_,
                "mean_gamma_r": self.mean_gamma_r, "mean_gamma_q": self.mean_gamma_q,
                "steps": self.steps}


@dataclass
class TrialResult:
    trial: int
    seed: int
    records: list[EpisodeRecord]
    failed: bool = False
    error: str = ""
    rejected_steps: int = 0


@dataclass
class AggregateCurve:
    """Per-episode mean and population std of every metric across trials."""

    episodes: np.ndarray
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    n_trials: int


def _episode_seeds(trial_seed: int, episodes: int) -> list[int]:
    rng = np.random.default_rng([trial_seed, 1])
    return [int(s) for s in rng.integers(0, 2 ** 31 - 1, size=episodes)]


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    """Train one fresh agent online for ``config.episodes`` episodes."""
    seed = config.base_seed + trial
    env = make_env(config.env_id, config.env_config)
    agent = Agent(env.n_features, env.n_actions, dataclasses.replace(config.agent, seed=seed))
    records: list[EpisodeRecord] = []
    try:
        for episode, env_seed in enumerate(_episode_seeds(seed, config.episodes)):
            x = env.reset(env_seed)
            reward_sum = punish_sum = gamma_r_sum = gamma_q_sum = 0.0
            steps = learned = 0
            while True:
                action = agent.act(x)
                result = env.step(action)
                diag = agent.learn(Transition(x, action, result.signal, result.observation, result.terminal))
                reward_sum += result.signal.reward
                punish_sum += result.signal.punish
                steps += 1
                if not diag.rejected:
                    gamma_r_sum += diag.gamma_r
                    gamma_q_sum += diag.gamma_q
                    learned += 1
                x = result.observation
                if result.terminal or result.truncated:
                    break
            records.append(EpisodeRecord(
                trial, episode, reward_sum, punish_sum,
                gamma_r_sum / learned if learned else math.nan,
                gamma_q_sum / learned if learned else math.nan,
                steps,
            ))
    except (DynamicsError, InvalidInputError, FloatingPointError) as exc:
        log.error("trial %d (seed %d) failed: %s", trial, seed, exc)
        return TrialResult(trial, seed, records, failed=True, error=str(exc),
                           rejected_steps=agent.rejected_steps)
    if config.save_checkpoints:
        ckpt_dir = Path(config.out_dir) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(agent, ckpt_dir / f"trial_{trial:03d}.json")
    return TrialResult(trial, seed, records, rejected_steps=agent.rejected_steps)


def run_trials(config: ExperimentConfig) -> list[TrialResult]:
    """All trials of one case, ordered by trial index whatever the worker count."""
    indices = range(config.trials)
    if config.jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, config.trials)) as pool:
            results = list(pool.map(run_trial, [config] * config.trials, indices))
    else:
        results = [run_trial(config, i) for i in indices]
    return sorted(results, key=lambda r: r.trial)


def aggregate(results: list[TrialResult], episodes: int) -> AggregateCurve:
    good = [r for r in results if not r.failed]
    table = {m: np.array([[getattr(rec, "return_" if m == "return" else m) for rec in r.records]
                          for r in good], dtype=float).reshape(len(good), episodes)
             for m in METRICS}
    if good:
        mean = {m: table[m].mean(axis=0) for m in METRICS}
        std = {m: table[m].std(axis=0) for m in METRICS}
    else:
        mean = {m: np.full(episodes, math.nan) for m in METRICS}
        std = {m: np.full(episodes, math.nan) for m in METRICS}
    return AggregateCurve(np.arange(episodes), mean, std, len(good))


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".9g")


def emit_csv(rows, path) -> Path:
    """Write episode records or an aggregate curve; byte-identical for identical input."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(rows, AggregateCurve):
        header = ["episode"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")]
        body = [
            [_fmt(int(ep))] + [_fmt(getattr(rows, s)[m][i]) for m in METRICS for s in ("mean", "std")]
            for i, ep in enumerate(rows.episodes)
        ]
    else:
        header = list(EPISODE_COLUMNS)
        body = [[_fmt(rec.row()[c]) for c in EPISODE_COLUMNS] for rec in rows]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
    return path


def read_episodes_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k in ("trial", "episode", "steps") else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]


def config_to_dict(config: ExperimentConfig) -> dict:
    env_cfg = config.env_config or make_env(config.env_id).config
    return {
        "env_id": config.env_id,
        "trials": config.trials,
        "episodes": config.episodes,
        "base_seed": config.base_seed,
        "agent": dataclasses.asdict(config.agent),
        "env_config": dataclasses.asdict(env_cfg),
    }


def write_case(config: ExperimentConfig, results: list[TrialResult], out_dir, extra=None) -> AggregateCurve:
    out_dir = Path(out_dir)
    records = [rec for r in results if not r.failed for rec in r.records]
    curve = aggregate(results, config.episodes)
    emit_csv(records, out_dir / "episodes.csv")
    emit_csv(curve, out_dir / "curve.csv")
    meta = {
        "config": config_to_dict(config),
        "trial_seeds": [r.seed for r in results],
        "failed_trials": [{"trial": r.trial, "error": r.error} for r in results if r.failed],
        "n_failed": sum(r.failed for r in results),
        "rejected_steps": [r.rejected_steps for r in results],
    }
    meta.update(extra or {})
    with open(out_dir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return curve


def run_case(config: ExperimentConfig, out_dir=None) -> tuple[list[TrialResult], AggregateCurve]:
    results = run_trials(config)
    out_dir = config.out_dir if out_dir is None else out_dir
    curve = write_case(config, results, out_dir)
    return results, curve


def average_discounts(results: list[TrialResult], episodes: int) -> tuple[float, float]:
    """Per-channel mean of episode-mean discounts over the final quarter, across trials."""
    window = max(1, episodes // 4)
    gr, gq = [], []
    for r in results:
        if r.failed:
            continue
        for rec in r.records[-window:]:
            if math.isfinite(rec.mean_gamma_r) and math.isfinite(rec.mean_gamma_q):
                gr.append(rec.mean_gamma_r)
                gq.append(rec.mean_gamma_q)
    if not gr:
        raise RuntimeError("no successful hyperbolic trials to average discounts from")
    return math.fsum(gr) / len(gr), math.fsum(gq) / len(gq)


def run_comparison(config: ExperimentConfig) -> dict[str, AggregateCurve]:
    """Hyperbolic phase, averaged discounts, then both exponential baselines on the same seeds."""
    out = Path(config.out_dir)
    hyper_cfg = dataclasses.replace(config, out_dir=str(out / "hyperbolic"),
                                    agent=dataclasses.replace(config.agent, mode="hyperbolic"))
    elapsed = {}
    start = time.perf_counter()
    hyper_results = run_trials(hyper_cfg)
    elapsed["hyperbolic"] = time.perf_counter() - start
    if all(r.failed for r in hyper_results):
        raise RuntimeError("every hyperbolic trial failed: "
                           + "; ".join(r.error for r in hyper_results))
    gamma_r, gamma_q = average_discounts(hyper_results, config.episodes)
    averages = {"average_gamma_r": gamma_r, "average_gamma_q": gamma_q,
                "averaging_window_episodes": max(1, config.episodes // 4)}

    curves = {"hyperbolic": write_case(hyper_cfg, hyper_results, out / "hyperbolic",
                                       {"case": "hyperbolic", **averages})}
    for case, (g_r, g_q) in (("exponential1", (0.99, 0.99)), ("exponential2", (gamma_r, gamma_q))):
        case_cfg = dataclasses.replace(config, out_dir=str(out / case), agent=dataclasses.replace(
            config.agent, mode="exponential", gamma_reward=g_r, gamma_punish=g_q))
        start = time.perf_counter()
        results = run_trials(case_cfg)
        elapsed[case] = time.perf_counter() - start
        curves[case] = write_case(case_cfg, results, out / case,
                                  {"case": case, **averages, "gamma_r": g_r, "gamma_q": g_q})
    summary = {
        "cases": list(CASES),
        "trial_seeds": config.trial_seeds(),
        **averages,
        "final_window_episodes": max(1, config.episodes // 10),
        "final_mean_return": {
            case: float(np.mean(curve.mean["return"][-max(1, config.episodes // 10):]))
            for case, curve in curves.items()
        },
        # wall-clock only; everything else in the output directory is deterministic
        "elapsed_seconds": elapsed,
    }
    with open(out / "comparison.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return curves


HEADS = ("critic_r", "critic_q", "policy")


def save_checkpoint(agent: Agent, path) -> None:
    """JSON checkpoint: config, text snapshots of the three heads, statistics, generator state."""
    state = agent.state_dict()
    heads = {name: export_params(getattr(agent, name).head, name) for name in HEADS}
    for name in HEADS:
        del state[name]
    with open(path, "w") as fh:
        json.dump({"config": dataclasses.asdict(agent.config), "heads": heads, "state": state}, fh, indent=1)


def load_checkpoint(path) -> Agent:
    from .td_core import HyperParams

    with open(path) as fh:
        data = json.load(fh)
    cfg = data["config"]
    cfg["hyper"] = HyperParams(**cfg["hyper"])
    state = data["state"]
    for name in HEADS:
        head_name, head = import_params(data["heads"][name])
        if head_name != name:
            raise ConfigurationError(f"checkpoint head {head_name!r} stored under {name!r}")
        state[name] = head.params
    return Agent.from_state_dict(state, AgentConfig(**cfg))


def default_jobs() -> int:
    return os.cpu_count() or 1
