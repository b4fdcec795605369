"""Command line entry point: ``hyperdiscount run`` and ``hyperdiscount compare``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import build_experiment, read_config_file
from .harness import run_case, run_comparison

# flag dest -> settings key
_FLAG_KEYS = {
    "env": "env", "mode": "mode", "kappa": "kappa", "exponent": "exponent", "beta": "beta",
    "gamma_r": "gamma_r", "gamma_q": "gamma_q", "trials": "trials", "episodes": "episodes",
    "seed": "seed", "out": "out", "jobs": "jobs", "critic_lr": "critic_lr",
    "actor_lr": "actor_lr", "ema_rate": "ema_rate", "checkpoints": "checkpoints",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", choices=["cartpole-rp", "acrobot-rp"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--config", metavar="FILE", help="flat key = value file; flags override it")
    p.add_argument("--jobs", type=int, metavar="N")
    p.add_argument("--critic-lr", type=float)
    p.add_argument("--actor-lr", type=float)
    p.add_argument("--ema-rate", type=float)
    p.add_argument("--checkpoints", action="store_true", default=None,
                   help="save each trained agent under <out>/checkpoints")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperdiscount",
        description="Hyperbolically-discounted actor-critic on reward/punishment tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one case over several seeded trials")
    _add_common(run)
    run.add_argument("--mode", choices=["hyperbolic", "exponential"])
    run.add_argument("--gamma-r", type=float)
    run.add_argument("--gamma-q", type=float)

    compare = sub.add_parser("compare", help="hyperbolic vs. both exponential baselines")
    _add_common(compare)
    return parser


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = read_config_file(args.config) if args.config else {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[key] = value
    return settings


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = build_experiment(resolve_settings(args))
    out = Path(config.out_dir)
    if args.command == "run":
        results, curve = run_case(config)
        window = max(1, config.episodes // 10)
        print(json.dumps({
            "out": str(out),
            "trials": config.trials,
            "failed": sum(r.failed for r in results),
            "final_mean_return": float(curve.mean["return"][-window:].mean()),
        }, indent=2))
    else:
        config = dataclasses.replace(config, agent=dataclasses.replace(config.agent, mode="hyperbolic"))
        run_comparison(config)
        print((out / "comparison.json").read_text(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
