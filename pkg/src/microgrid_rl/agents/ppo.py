"""Clipped-surrogate policy optimization on the same two-headed network.

A single worker collects ``workers`` days per epoch (matching the sample
budget of the asynchronous learner), computes n-step advantages under the
collecting parameters and then runs ``ppo_epochs`` full-batch passes. The
probability ratio is taken against the stored network policy at collection
time, not the epsilon-mixed behaviour policy.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .. import nn
from ..config import LearnerConfig
from ..env import N_ACTIONS, OBS_DIM, Microgrid, MicrogridGym, daily_cost
from .a3c import TrainResult
from .common import EpisodeStats, EpsilonSchedule, mixed_policy, sample


def n_step_returns(rewards, values, terminal_value: float, n: int, gamma: float) -> np.ndarray:
    """Return at each step: up to ``n`` discounted rewards plus the
    discounted value at the end of the window (``terminal_value`` past the
    last step)."""
    T = len(rewards)
    ext = np.append(np.asarray(values, dtype=float), terminal_value)
    out = np.empty(T)
    for t in range(T):
        end = min(t + n, T)
        R = ext[end]
        for i in range(end - 1, t - 1, -1):
            R = rewards[i] + gamma * R
        out[t] = R
    return out


def ppo_update(p: nn.ParameterSet, obs, actions, advantages, returns, old_probs,
               clip: float, entropy_coef: float) -> nn.GradientSet:
    """Summed gradient of the negated clipped surrogate plus critic and
    entropy terms. Samples whose ratio sits outside the clip range in the
    direction the advantage pushes contribute no policy gradient."""
    pi, _ = nn.forward(p, obs)
    ratio = pi[np.arange(len(actions)), actions] / old_probs
    clipped = ((advantages > 0) & (ratio > 1 + clip)) | ((advantages < 0) & (ratio < 1 - clip))
    weight = np.where(clipped, 0.0, advantages * ratio)
    return nn.actor_critic_grads(p, obs, actions, weight, returns, entropy_coef)


class PPOTrainer:
    def __init__(self, grid: Microgrid, cfg: LearnerConfig, train_days: Optional[int] = None,
                 init: Optional[nn.ParameterSet] = None, monitor=None):
        self.grid = grid
        self.cfg = cfg
        self.train_days = train_days or grid.days
        self.monitor = monitor
        self.params = (init or nn.ParameterSet.initialize(OBS_DIM, cfg.hidden, N_ACTIONS, seed=cfg.seed)).copy()
        self.schedule = EpsilonSchedule(cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min)
        self.steps = 0

    def _collect(self, env, rng, day):
        obs = env.reset(day)
        rows, infos, ent = [], [], []
        done = False
        while not done:
            pi, v = nn.forward(self.params, obs)
            eps = self.schedule(self.steps)
            a = sample(rng, mixed_policy(pi, eps))
            next_obs, r, done, info = env.step(a)
            self.steps += 1
            rows.append((obs, a, self.cfg.scaled(r), v, pi[a]))
            infos.append(info)
            ent.append(float(nn.entropy(pi)))
            obs = next_obs
        return rows, infos, ent, eps

    def train(self) -> TrainResult:
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, 0])
        env = MicrogridGym(self.grid, seed=cfg.seed * 7919)
        history = []
        for k in range(cfg.episodes):
            batch, stats = [], []
            for _ in range(cfg.workers):
                rows, infos, ent, eps = self._collect(env, rng, k % self.train_days)
                rewards = np.array([r[2] for r in rows])
                values = np.array([r[3] for r in rows])
                ret = n_step_returns(rewards, values, 0.0, cfg.n_steps, cfg.gamma)
                batch.extend((r[0], r[1], g - r[3], g, r[4]) for r, g in zip(rows, ret))
                stats.append((sum(i.revenue - i.cost for i in infos), daily_cost(infos), np.mean(ent), eps))
            obs = np.stack([b[0] for b in batch])
            actions = np.array([b[1] for b in batch])
            adv = np.array([b[2] for b in batch])
            ret = np.array([b[3] for b in batch])
            old = np.array([b[4] for b in batch])
            for _ in range(cfg.ppo_epochs):
                g = ppo_update(self.params, obs, actions, adv, ret, old, cfg.ppo_clip, cfg.entropy_coef)
                for w, dw in zip(self.params.arrays(), g.arrays()):
                    w -= cfg.lr * dw
                self.params.version += 1
            s = np.array(stats, dtype=float).mean(axis=0)
            score = self.monitor(self.params.copy()) if self.monitor else float("nan")
            history.append(EpisodeStats(k, float(s[0]), float(s[1]), float(s[2]), float(s[3]), score))
        return TrainResult(self.params.copy(), history, [], self.steps, 0)
