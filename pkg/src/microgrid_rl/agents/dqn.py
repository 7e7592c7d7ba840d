"""Deep Q-learning baselines (plain and double) on the shared network body.

The policy logits are read as action values; the value head is unused.
Exploration is epsilon-greedy under the same linear schedule as the actor
critics, and each epoch plays ``workers`` days so the sample budget matches.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .. import nn
from ..config import LearnerConfig
from ..env import N_ACTIONS, OBS_DIM, Microgrid, MicrogridGym, daily_cost
from .a3c import TrainResult
from .common import EpisodeStats, EpsilonSchedule, batch_dqn_targets
from .replay import ReplayPool, Transition, stack


class DQNTrainer:
    def __init__(self, grid: Microgrid, cfg: LearnerConfig, double: bool = False,
                 train_days: Optional[int] = None, init: Optional[nn.ParameterSet] = None, monitor=None):
        self.grid = grid
        self.cfg = cfg
        self.double = double
        self.train_days = train_days or grid.days
        self.monitor = monitor
        self.online = (init or nn.ParameterSet.initialize(OBS_DIM, cfg.hidden, N_ACTIONS, seed=cfg.seed)).copy()
        self.target = self.online.copy()
        self.pool = ReplayPool(cfg.pool_capacity, seed=cfg.seed + 202)
        self.schedule = EpsilonSchedule(cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min)
        self.steps = 0

    def _learn(self) -> None:
        cfg = self.cfg
        if len(self.pool) < cfg.dqn_batch:
            return
        obs, actions, rewards, next_obs, terminal = stack(self.pool.sample(cfg.dqn_batch))
        targets = batch_dqn_targets(rewards, next_obs, terminal, cfg.gamma, self.target,
                                    self.online if self.double else None)
        g = nn.q_grads(self.online, obs, actions, targets)
        for w, dw in zip(self.online.arrays(), g.arrays()):
            w -= cfg.lr / cfg.dqn_batch * dw
        self.online.version += 1

    def train(self) -> TrainResult:
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, 0])
        env = MicrogridGym(self.grid, seed=cfg.seed * 7919)
        history = []
        for k in range(cfg.episodes):
            stats = []
            for _ in range(cfg.workers):
                obs = env.reset(k % self.train_days)
                infos, reward, done = [], 0.0, False
                while not done:
                    eps = self.schedule(self.steps)
                    if rng.random() < eps:
                        a = int(rng.integers(N_ACTIONS))
                    else:
                        a = int(np.argmax(nn.q_values(self.online, obs)))
                    next_obs, r, done, info = env.step(a)
                    self.steps += 1
                    self.pool.append(Transition(obs, a, cfg.scaled(r), next_obs, done))
                    self._learn()
                    if self.steps % cfg.dqn_target_sync == 0:
                        self.target = self.online.copy()
                    infos.append(info)
                    reward += r
                    obs = next_obs
                # Q-learners have no policy distribution; entropy is reported as 0
                stats.append((reward, daily_cost(infos), 0.0, eps))
            s = np.array(stats).mean(axis=0)
            score = self.monitor(self.online.copy()) if self.monitor else float("nan")
            history.append(EpisodeStats(k, float(s[0]), float(s[1]), float(s[2]), float(s[3]), score))
        return TrainResult(self.online.copy(), history, [], self.steps, 0)
