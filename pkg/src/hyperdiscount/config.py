"""Flat ``key = value`` experiment files and their mapping onto config objects.

Top-level keys mirror the CLI flags (``env``, ``mode``, ``kappa``, ...).
Environment constants use a dotted prefix, e.g. ``cartpole.force_mag = 10``
or ``acrobot.torques = -1, 0, 1``.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import dataclasses

from .agent import AgentConfig
from .envs import ENVIRONMENTS
from .errors import ConfigurationError
from .harness import ExperimentConfig
from .td_core import HyperParams

ENV_PREFIXES = {"cartpole": "cartpole-rp", "acrobot": "acrobot-rp"}

# default episode counts per environment
DEFAULT_EPISODES = {"cartpole-rp": 300, "acrobot-rp": 500}

_AGENT_KEYS = {
    "gamma_r": "gamma_reward",
    "gamma_q": "gamma_punish",
    "critic_lr": "critic_lr",
    "actor_lr": "actor_lr",
    "ema_rate": "ema_rate",
    "hidden": "hidden",
    "compensate": "compensate",
    "critic_optimizer": "critic_optimizer",
    "actor_optimizer": "actor_optimizer",
    "mode": "mode",
}
_HYPER_KEYS = ("kappa", "exponent", "beta")
_EXPERIMENT_KEYS = {"env": "env_id", "trials": "trials", "episodes": "episodes",
                    "seed": "base_seed", "out": "out_dir", "jobs": "jobs",
                    "checkpoints": "save_checkpoints"}
KNOWN_KEYS = set(_AGENT_KEYS) | set(_HYPER_KEYS) | set(_EXPERIMENT_KEYS)


def parse_config_text(text: str) -> dict[str, str]:
    settings = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KNOWN_KEYS and key.split(".", 1)[0] not in ENV_PREFIXES:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        settings[key] = value
    return settings


def read_config_file(path) -> dict[str, str]:
    with open(path) as fh:
        return parse_config_text(fh.read())


def _coerce(value, annotation):
    if not isinstance(value, str):
        return value
    if annotation in (bool, "bool"):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"not a boolean: {value!r}")
    if annotation in (int, "int"):
        return int(value)
    if annotation in (float, "float"):
        return float(value)
    if isinstance(annotation, str) and annotation.startswith("tuple"):
        return tuple(float(v) for v in value.split(",") if v.strip())
    return value


def _field_types(cls) -> dict[str, object]:
    # postponed annotations: types arrive as strings such as "float" or "tuple[float, ...]"
    return {f.name: f.type for f in dataclasses.fields(cls)}


def build_experiment(settings: dict) -> ExperimentConfig:
    """Resolve a flat settings mapping (strings or typed values) into an ExperimentConfig."""
    settings = {k.replace("-", "_"): v for k, v in settings.items() if v is not None}
    env_id = settings.get("env", "cartpole-rp")
    if env_id not in ENVIRONMENTS:
        raise ConfigurationError(f"unknown environment {env_id!r}")

    hyper_fields = _field_types(HyperParams)
    hyper = HyperParams(**{k: _coerce(settings[k], hyper_fields[k]) for k in _HYPER_KEYS if k in settings})

    agent_fields = _field_types(AgentConfig)
    agent_kwargs = {target: _coerce(settings[key], agent_fields[target])
                    for key, target in _AGENT_KEYS.items() if key in settings}
    agent = AgentConfig(hyper=hyper, **agent_kwargs)

    _, env_config_cls = ENVIRONMENTS[env_id]
    env_fields = _field_types(env_config_cls)
    env_kwargs = {}
    for key, value in settings.items():
        if "." not in key:
            continue
        prefix, name = key.split(".", 1)
        if ENV_PREFIXES.get(prefix) != env_id:
            continue
        if name not in env_fields:
            raise ConfigurationError(f"unknown {prefix} constant {name!r}")
        env_kwargs[name] = _coerce(value, env_fields[name])
    env_config = env_config_cls(**env_kwargs)

    exp_kwargs = {"env_id": env_id, "agent": agent, "env_config": env_config,
                  "episodes": DEFAULT_EPISODES[env_id]}
    exp_fields = _field_types(ExperimentConfig)
    for key, target in _EXPERIMENT_KEYS.items():
        if key in settings and key != "env":
            exp_kwargs[target] = _coerce(settings[key], exp_fields[target])
    return ExperimentConfig(**exp_kwargs)
