"""Training, evaluation and comparison runs driven by an ExperimentConfig."""
from __future__ import annotations

import csv
import dataclasses
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import nn
from .agents import A3CTrainer, DQNTrainer, PPOTrainer, TrainResult, evaluate, greedy_policy, random_policy
from .baseline import retailer_baseline
from .config import ExperimentConfig
from .env import Microgrid

ALGORITHMS = ("m-a3c", "ppo", "dqn", "double-dqn")
COMPARE_COLUMNS = ALGORITHMS + ("retailer",)
HISTORY_FIELDS = ("episode", "reward", "daily_cost", "entropy", "epsilon", "eval_reward")


def eval_range(cfg: ExperimentConfig) -> range:
    return range(cfg.eval_start_day, cfg.eval_start_day + cfg.eval_days)


def is_q_learner(algorithm: str) -> bool:
    return algorithm in ("dqn", "double-dqn")


def train(algorithm: str, cfg: ExperimentConfig, seed: Optional[int] = None, grid: Optional[Microgrid] = None,
          monitor: Optional[Callable[[nn.ParameterSet], float]] = None) -> TrainResult:
    """Train one learner under ``cfg.learner`` (with ``seed`` overriding its seed)."""
    grid = grid or Microgrid(cfg.env)
    learner = cfg.learner if seed is None else dataclasses.replace(cfg.learner, seed=seed)
    days = min(cfg.train_days, grid.days)
    if algorithm == "m-a3c":
        trainer = A3CTrainer(grid, learner, train_days=days, monitor=monitor)
    elif algorithm == "ppo":
        trainer = PPOTrainer(grid, learner, train_days=days, monitor=monitor)
    elif algorithm in ("dqn", "double-dqn"):
        trainer = DQNTrainer(grid, learner, double=algorithm == "double-dqn", train_days=days, monitor=monitor)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return trainer.train()


def greedy_score(grid: Microgrid, days, q_network: bool = False) -> Callable[[nn.ParameterSet], float]:
    """Monitor returning the mean greedy reward over ``days``."""
    return lambda p: float(evaluate(grid, greedy_policy(p, q_network), days)[0].mean())


def random_reward(grid: Microgrid, days, seed: int = 0, repeats: int = 5) -> float:
    """Mean daily reward of the uniform-random policy."""
    rewards = [evaluate(grid, random_policy(seed + k), days)[0] for k in range(repeats)]
    return float(np.mean(rewards))


def write_history(history, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_FIELDS)
        for h in history:
            w.writerow([h.episode] + [repr(float(getattr(h, f))) for f in HISTORY_FIELDS[1:]])


def read_history(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclasses.dataclass
class Comparison:
    days: list
    # algorithm -> (replicates, days) array of daily costs
    costs: dict
    retailer: np.ndarray

    def table(self) -> dict:
        """Per-day cost averaged over replicates, one column per policy."""
        out = {a: c.mean(axis=0) for a, c in self.costs.items()}
        out["retailer"] = self.retailer
        return out

    def replicate_means(self) -> dict:
        return {a: c.mean(axis=1) for a, c in self.costs.items()}


def compare(cfg: ExperimentConfig, algorithms=None, progress: Optional[Callable[[str], None]] = None) -> Comparison:
    grid = Microgrid(cfg.env)
    days = list(eval_range(cfg))
    costs = {}
    for algo in algorithms or cfg.algorithms:
        rows = []
        for r in range(cfg.replicates):
            seed = cfg.learner.seed + r
            res = train(algo, cfg, seed=seed, grid=grid)
            rows.append(evaluate(grid, greedy_policy(res.params, is_q_learner(algo)), days)[1])
            if progress:
                progress(f"{algo} seed {seed}: mean cost {rows[-1].mean():.2f}")
        costs[algo] = np.array(rows)
    retailer = retailer_baseline(cfg.env, days=days)
    return Comparison(days, costs, retailer)


def write_comparison(cmp: Comparison, path, replicates_path=None) -> None:
    """Cost table: one row per day, then ``mean`` and ``std`` rows."""
    table = cmp.table()
    cols = [c for c in COMPARE_COLUMNS if c in table]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day"] + cols)
        for i, d in enumerate(cmp.days):
            w.writerow([d] + [repr(float(table[c][i])) for c in cols])
        w.writerow(["mean"] + [repr(float(np.mean(table[c]))) for c in cols])
        w.writerow(["std"] + [repr(float(np.std(table[c]))) for c in cols])
    if replicates_path is not None:
        means = cmp.replicate_means()
        with Path(replicates_path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["algorithm", "replicate", "mean_daily_cost"])
            for a, m in means.items():
                for r, v in enumerate(m):
                    w.writerow([a, r, repr(float(v))])
